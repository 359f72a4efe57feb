/**
 * Binary mask grid behind the painting canvas: brush strokes, bounded
 * undo, and export as a single-channel PNG whose decoded bytes match the
 * grid bit for bit (255 = painted target region, 0 = preserved context).
 */

import { encodeGrayPng } from "./png.js";

const UNDO_LIMIT = 50;

export class MaskCanvasState {
  readonly width: number;
  readonly height: number;
  brushRadius: number;
  private grid: Uint8Array;
  private undoStack: Uint8Array[] = [];
  private strokeOpen = false;

  constructor(width: number, height: number, brushRadius = 8) {
    if (width < 1 || height < 1) throw new Error("mask dimensions must be positive");
    this.width = width;
    this.height = height;
    this.brushRadius = brushRadius;
    this.grid = new Uint8Array(width * height);
  }

  cell(x: number, y: number): number {
    return this.grid[y * this.width + x];
  }

  /** Snapshot for undo; one snapshot per stroke regardless of stamps. */
  beginStroke(): void {
    if (this.strokeOpen) return;
    this.undoStack.push(this.grid.slice());
    if (this.undoStack.length > UNDO_LIMIT) this.undoStack.shift();
    this.strokeOpen = true;
  }

  endStroke(): void {
    this.strokeOpen = false;
  }

  /** Stamp a brush disc at (x, y); value 1 paints, 0 erases. */
  stamp(x: number, y: number, value: 0 | 1 = 1): void {
    const r = this.brushRadius;
    const r2 = r * r;
    const x0 = Math.max(0, Math.ceil(x - r));
    const x1 = Math.min(this.width - 1, Math.floor(x + r));
    const y0 = Math.max(0, Math.ceil(y - r));
    const y1 = Math.min(this.height - 1, Math.floor(y + r));
    for (let yy = y0; yy <= y1; yy++) {
      for (let xx = x0; xx <= x1; xx++) {
        const dx = xx - x;
        const dy = yy - y;
        if (dx * dx + dy * dy <= r2) {
          this.grid[yy * this.width + xx] = value;
        }
      }
    }
  }

  /** Paint every cell of an axis-aligned rectangle (inclusive bounds). */
  paintRect(x0: number, y0: number, x1: number, y1: number, value: 0 | 1 = 1): void {
    for (let y = Math.max(0, y0); y <= Math.min(this.height - 1, y1); y++) {
      for (let x = Math.max(0, x0); x <= Math.min(this.width - 1, x1); x++) {
        this.grid[y * this.width + x] = value;
      }
    }
  }

  undo(): boolean {
    const previous = this.undoStack.pop();
    if (!previous) return false;
    this.grid = previous;
    this.strokeOpen = false;
    return true;
  }

  clear(): void {
    this.beginStroke();
    this.grid.fill(0);
    this.endStroke();
  }

  paintedCount(): number {
    let n = 0;
    for (const v of this.grid) n += v;
    return n;
  }

  snapshot(): Uint8Array {
    return this.grid.slice();
  }

  /** Export as single-channel PNG bytes: 255 where painted, 0 elsewhere. */
  exportPng(): Uint8Array {
    const pixels = new Uint8Array(this.grid.length);
    for (let i = 0; i < this.grid.length; i++) {
      pixels[i] = this.grid[i] ? 255 : 0;
    }
    return encodeGrayPng(pixels, this.width, this.height);
  }
}
