// Challenge bot: the scripted operator used by the headless service test.
//
// Protocol per attempt: open both photoionization shutters, close them as
// soon as the Nth capture of the attempt is seen (commands are stamped by
// the server on arrival, so the reaction latency is the real stream+send
// latency), let things settle, declare done, clear the trap.

import { ConsoleClient } from "./client.js";
import { applyMessage, declareDone, newViewModel, startChallenge } from "./viewmodel.js";
import type { ConsoleViewModel } from "./viewmodel.js";
import type { ServerMsg } from "./protocol.js";

export interface BotResult {
  attempts: number;
  successes: number;
  successFraction: number;
}

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

export class ChallengeBot {
  readonly vm: ConsoleViewModel = newViewModel();
  private captureWaiters: (() => void)[] = [];

  constructor(private client: ConsoleClient, private timeScale: number) {
    client.onMessage = (msg: ServerMsg) => {
      const before = this.vm.capturedTotal;
      applyMessage(this.vm, msg);
      if (this.vm.capturedTotal > before) {
        const waiters = this.captureWaiters;
        this.captureWaiters = [];
        for (const w of waiters) w();
      }
    };
  }

  private simToWallMs(simSeconds: number): number {
    return (simSeconds / this.timeScale) * 1000;
  }

  private nextCapture(timeoutMs: number): Promise<boolean> {
    return new Promise((resolve) => {
      const timer = setTimeout(() => resolve(false), timeoutMs);
      this.captureWaiters.push(() => {
        clearTimeout(timer);
        resolve(true);
      });
    });
  }

  async warmUp(ovenPowerW: number, warmupSimSeconds: number): Promise<void> {
    await this.client.command("set_oven_power", { power_w: ovenPowerW });
    await this.client.command("set_shutter", { name: "cooling", open: true });
    await sleep(this.simToWallMs(warmupSimSeconds));
  }

  async runAttempt(targetN: number, attemptTimeoutMs: number): Promise<boolean> {
    startChallenge(this.vm, targetN);
    await this.client.command("set_shutter", { name: "461", open: true });
    await this.client.command("set_shutter", { name: "405", open: true });
    const deadline = Date.now() + attemptTimeoutMs;
    while (this.vm.challenge.capturesThisAttempt < targetN && Date.now() < deadline) {
      await this.nextCapture(Math.max(deadline - Date.now(), 1));
    }
    // react: close both photoionization shutters immediately
    await Promise.all([
      this.client.command("set_shutter", { name: "461", open: false }),
      this.client.command("set_shutter", { name: "405", open: false }),
    ]);
    await sleep(this.simToWallMs(1.0)); // settle; late captures count against us
    const ok = declareDone(this.vm);
    await this.client.command("clear_trap");
    await sleep(this.simToWallMs(0.2));
    return ok;
  }

  async runChallenge(targetN: number, attempts: number,
                     attemptTimeoutSimSeconds = 120): Promise<BotResult> {
    for (let i = 0; i < attempts; i++) {
      await this.runAttempt(targetN, this.simToWallMs(attemptTimeoutSimSeconds));
    }
    return {
      attempts: this.vm.challenge.attempts,
      successes: this.vm.challenge.successes,
      successFraction: this.vm.challenge.successes / Math.max(this.vm.challenge.attempts, 1),
    };
  }
}
