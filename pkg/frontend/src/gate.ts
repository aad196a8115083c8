// One in-flight mutation per control. A second click on the same key while
// the first request is pending is dropped, so a toggle can never double-fire.

export class MutationGate {
  private inFlight = new Set<string>();

  isBusy(key: string): boolean {
    return this.inFlight.has(key);
  }

  async run<T>(key: string, action: () => Promise<T>): Promise<T | undefined> {
    if (this.inFlight.has(key)) {
      return undefined;
    }
    this.inFlight.add(key);
    try {
      return await action();
    } finally {
      this.inFlight.delete(key);
    }
  }
}
