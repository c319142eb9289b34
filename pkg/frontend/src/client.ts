/**
 * Host-side client for the optimizer service.
 *
 * The service is a child process speaking one JSON object per line on
 * stdin/stdout. During a `step` the service asks the host to evaluate
 * the loss (exactly twice per zeroth-order step) before it answers the
 * step request itself, so the request loop also dispatches `eval`
 * exchanges back through the caller-supplied loss callback.
 */

import { spawn, type ChildProcessByStdio } from "node:child_process";
import type { Readable, Writable } from "node:stream";
import { createInterface, type Interface } from "node:readline";

import {
  type LossFn,
  type OptimizerKind,
  type OptimizerSpec,
  type ServiceError,
  type StepRecord,
  thetaFromHex,
  thetaToHex,
} from "./protocol.js";

export class OptimizerServiceError extends Error {
  readonly kind: string;
  readonly field?: string;

  constructor(reply: ServiceError) {
    super(`${reply.error}: ${reply.message}`);
    this.kind = reply.error;
    this.field = reply.field;
  }
}

interface PendingLine {
  resolve: (line: string) => void;
  reject: (err: Error) => void;
}

/** Options for launching the service process. */
export interface ServiceOptions {
  /** Command to run (default "zoadamu"). */
  command?: string;
  /** Arguments before the subcommand (default []), e.g. ["-m", "zoadamu.cli"]. */
  args?: string[];
}

/**
 * One service process. Create optimizers with {@link createOptimizer};
 * call {@link shutdown} when done.
 */
export class OptimizerService {
  private readonly child: ChildProcessByStdio<Writable, Readable, null>;
  private readonly lines: Interface;
  private readonly buffered: string[] = [];
  private readonly waiting: PendingLine[] = [];
  private closed = false;

  constructor(options: ServiceOptions = {}) {
    const command = options.command ?? "zoadamu";
    const args = [...(options.args ?? []), "serve"];
    this.child = spawn(command, args, { stdio: ["pipe", "pipe", "inherit"] });
    this.lines = createInterface({ input: this.child.stdout });
    this.lines.on("line", (line) => {
      const pending = this.waiting.shift();
      if (pending) {
        pending.resolve(line);
      } else {
        this.buffered.push(line);
      }
    });
    this.lines.on("close", () => {
      this.closed = true;
      for (const pending of this.waiting.splice(0)) {
        pending.reject(new Error("optimizer service closed its output"));
      }
    });
  }

  private send(obj: unknown): void {
    if (this.closed) {
      throw new Error("optimizer service is shut down");
    }
    this.child.stdin.write(JSON.stringify(obj) + "\n");
  }

  private nextLine(): Promise<string> {
    const line = this.buffered.shift();
    if (line !== undefined) {
      return Promise.resolve(line);
    }
    if (this.closed) {
      return Promise.reject(new Error("optimizer service closed its output"));
    }
    return new Promise((resolve, reject) => {
      this.waiting.push({ resolve, reject });
    });
  }

  /**
   * Send one request and wait for its reply, answering any interleaved
   * `eval` exchanges with the given loss callback. A callback that
   * throws is reported to the service, which fails and rolls back the
   * in-flight step before replying.
   */
  async request(
    obj: Record<string, unknown>,
    loss?: LossFn,
  ): Promise<Record<string, unknown>> {
    this.send(obj);
    for (;;) {
      const reply = JSON.parse(await this.nextLine()) as Record<string, unknown>;
      if (reply["op"] === "eval") {
        const theta = thetaFromHex(reply["theta_hex"] as string);
        if (loss === undefined) {
          this.send({ error: "host has no loss callback for this request" });
          continue;
        }
        try {
          const value = loss(theta);
          // JSON has no NaN/Infinity literal; the service accepts the
          // string forms and still fails the step as a non-finite loss
          this.send({ loss: Number.isFinite(value) ? value : String(value) });
        } catch (err) {
          this.send({ error: String(err) });
        }
        continue;
      }
      if (reply["ok"] === false) {
        throw new OptimizerServiceError(reply as unknown as ServiceError);
      }
      return reply;
    }
  }

  /** Create an optimizer on the service. */
  async createOptimizer(
    kind: OptimizerKind,
    theta0: Float64Array,
    spec: OptimizerSpec,
  ): Promise<BoundOptimizer> {
    const reply = await this.request({
      op: "create",
      kind,
      config: { ...spec, theta0_hex: thetaToHex(theta0) },
    });
    return new BoundOptimizer(this, reply["handle"] as number, kind);
  }

  /** Stop the service process and wait for it to exit. */
  async shutdown(): Promise<void> {
    if (this.closed) {
      return;
    }
    await this.request({ op: "shutdown" });
    this.child.stdin.end();
    await new Promise<void>((resolve) => this.child.once("exit", () => resolve()));
    this.closed = true;
  }
}

/** A live optimizer handle on a service. */
export class BoundOptimizer {
  private closed = false;

  constructor(
    private readonly service: OptimizerService,
    readonly handle: number,
    readonly kind: OptimizerKind,
  ) {}

  /**
   * Advance one step. The loss callback is invoked exactly twice (the
   * paired forward passes); if it throws or returns a non-finite value
   * the step fails and the optimizer state is left untouched.
   */
  async step(loss: LossFn): Promise<StepRecord> {
    const reply = await this.service.request({ op: "step", handle: this.handle }, loss);
    return reply["record"] as unknown as StepRecord;
  }

  /** Current parameter vector, decoded bit-exactly. */
  async getParams(): Promise<Float64Array> {
    const reply = await this.service.request({ op: "get_params", handle: this.handle });
    return thetaFromHex(reply["theta_hex"] as string);
  }

  /** Release the handle on the service. */
  async close(): Promise<void> {
    if (this.closed) {
      return;
    }
    await this.service.request({ op: "close", handle: this.handle });
    this.closed = true;
  }
}
