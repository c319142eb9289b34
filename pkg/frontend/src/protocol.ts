/**
 * Wire types and encoding helpers for the line-based JSON optimizer
 * protocol.
 *
 * Parameter vectors cross the process boundary hex-encoded as
 * little-endian IEEE 754 binary64, never as decimal text, so host-side
 * trajectories match native runs bit for bit.
 */

/** Optimizers the service can drive. */
export type OptimizerKind = "mezo" | "zo-adamu" | "zo-adamm";

/** Annealing preset selecting the post-T2 constants. */
export type SchedulePreset = "eq7-verbatim" | "text-final-phase";

/** Configuration accepted by the `create` operation. */
export interface OptimizerSpec {
  /** Learning rate; must be positive. */
  eta: number;
  /** Warm-up end step (1-indexed). */
  t1: number;
  /** Cosine-annealing end step. */
  t2: number;
  /** Total step budget. */
  t3: number;
  /** Two-point perturbation scale (default 1e-3). */
  eps?: number;
  /** Denominator stabilizer inside the square root (default 1e-8). */
  sigma?: number;
  /** Base seed for the per-step seed sequence (default 0). */
  seed?: number;
  preset?: SchedulePreset;
  phi_alpha?: number;
  phi_beta1?: number;
  phi_beta2?: number;
}

/** Per-step trace record returned by a successful `step`. */
export interface StepRecord {
  step: number;
  /** Seed that regenerates this step's perturbation. */
  seed: number;
  loss_plus: number;
  loss_minus: number;
  g_scalar: number;
  alpha: number;
  beta1: number;
  beta2: number;
  /** 64-bit checksum of the post-step parameter bytes. */
  theta_checksum: number;
}

/** Loss callback evaluated by the host: theta in, scalar loss out. */
export type LossFn = (theta: Float64Array) => number;

/** Failure reply from the service. */
export interface ServiceError {
  ok: false;
  error: string;
  message: string;
  field?: string;
}

/** Encode a parameter vector as little-endian binary64 hex. */
export function thetaToHex(theta: Float64Array): string {
  const bytes = new Uint8Array(theta.length * 8);
  const view = new DataView(bytes.buffer);
  for (let i = 0; i < theta.length; i++) {
    view.setFloat64(i * 8, theta[i], true);
  }
  return Buffer.from(bytes).toString("hex");
}

/** Decode a little-endian binary64 hex string. */
export function thetaFromHex(hex: string): Float64Array {
  if (hex.length % 16 !== 0) {
    throw new Error(`theta hex length ${hex.length} is not a multiple of 16`);
  }
  const bytes = Buffer.from(hex, "hex");
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const theta = new Float64Array(hex.length / 16);
  for (let i = 0; i < theta.length; i++) {
    theta[i] = view.getFloat64(i * 8, true);
  }
  return theta;
}
