// Strip chart of fluorescence counts on a 2D canvas.  Shows the last
// windowSeconds of bins as a step trace; stream gaps are marked with an
// orange tick and never interpolated across.

import type { BinView } from "./viewmodel.js";

export class StripChart {
  private ctx: CanvasRenderingContext2D;
  windowSeconds = 60;

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
  }

  render(bins: BinView[], simTime: number): void {
    const { width: w, height: h } = this.canvas;
    const ctx = this.ctx;
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, w, h);
    const t1 = simTime;
    const t0 = t1 - this.windowSeconds;
    const visible = bins.filter((b) => b.t >= t0);
    const left = 46;
    const bottom = h - 22;
    const plotW = w - left - 8;
    const plotH = bottom - 8;
    const yMax = Math.max(50, ...visible.map((b) => b.counts)) * 1.15;

    const x = (t: number) => left + ((t - t0) / this.windowSeconds) * plotW;
    const y = (c: number) => bottom - (c / yMax) * plotH;

    // axes and gridlines
    ctx.strokeStyle = "#2a3342";
    ctx.fillStyle = "#8b97a8";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "right";
    for (let i = 0; i <= 4; i++) {
      const cy = bottom - (i / 4) * plotH;
      ctx.beginPath();
      ctx.moveTo(left, cy);
      ctx.lineTo(w - 8, cy);
      ctx.stroke();
      ctx.fillText(String(Math.round((yMax * i) / 4)), left - 5, cy + 4);
    }
    ctx.textAlign = "center";
    for (let s = Math.ceil(t0 / 10) * 10; s <= t1; s += 10) {
      ctx.fillText(`${s.toFixed(0)}s`, x(s), h - 6);
    }

    // step trace with gap markers
    ctx.strokeStyle = "#4fc3f7";
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    let pen = false;
    for (const b of visible) {
      if (b.gapBefore) pen = false;
      const bx = x(b.t);
      const by = y(b.counts);
      if (!pen) {
        ctx.moveTo(bx, by);
        pen = true;
      } else {
        ctx.lineTo(bx, by);
      }
      if (b.gapBefore) {
        ctx.save();
        ctx.strokeStyle = "#ffb74d";
        ctx.beginPath();
        ctx.moveTo(bx, 8);
        ctx.lineTo(bx, bottom);
        ctx.setLineDash([3, 4]);
        ctx.stroke();
        ctx.restore();
      }
    }
    ctx.stroke();
    ctx.lineWidth = 1;
  }
}
