// Request pacing for interactive panels: slider drags are debounced and
// stale responses (superseded by a newer request) are discarded by
// sequence number. At most one render per panel per settled input.

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  timers: { set: (cb: () => void, ms: number) => number; clear: (id: number) => void } = {
    set: (cb, ms) => setTimeout(cb, ms) as unknown as number,
    clear: (id) => clearTimeout(id),
  },
): (...args: A) => void {
  let pending: number | null = null;
  return (...args: A) => {
    if (pending !== null) timers.clear(pending);
    pending = timers.set(() => {
      pending = null;
      fn(...args);
    }, waitMs);
  };
}

export class SequenceGate {
  private issued = 0;
  private rendered = 0;

  next(): number {
    return ++this.issued;
  }

  /** True when a response with this ticket is still the freshest. */
  accept(ticket: number): boolean {
    if (ticket <= this.rendered) return false;
    this.rendered = ticket;
    return true;
  }
}
