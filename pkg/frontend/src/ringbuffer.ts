// Bounded ring buffer; memory does not grow with session length.

export class RingBuffer<T> {
  private items: T[] = [];
  private start = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
  }

  push(item: T): void {
    if (this.items.length < this.capacity) {
      this.items.push(item);
    } else {
      this.items[this.start] = item;
      this.start = (this.start + 1) % this.capacity;
    }
  }

  get length(): number {
    return this.items.length;
  }

  get(i: number): T {
    if (i < 0 || i >= this.items.length) throw new RangeError(`index ${i}`);
    return this.items[(this.start + i) % this.capacity];
  }

  last(): T | undefined {
    return this.items.length ? this.get(this.items.length - 1) : undefined;
  }

  toArray(): T[] {
    const out: T[] = new Array(this.items.length);
    for (let i = 0; i < this.items.length; i++) out[i] = this.get(i);
    return out;
  }
}
