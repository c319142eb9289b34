export {
  BoundOptimizer,
  OptimizerService,
  OptimizerServiceError,
  type ServiceOptions,
} from "./client.js";
export {
  thetaFromHex,
  thetaToHex,
  type LossFn,
  type OptimizerKind,
  type OptimizerSpec,
  type SchedulePreset,
  type ServiceError,
  type StepRecord,
} from "./protocol.js";
