// Per-scene attempt history, newest first, persisted in localStorage so a
// reload keeps the phrasing trail. Storage is injected for tests.

export interface Attempt {
  id: string;
  sceneId: string;
  condition: "baseline" | "instructed";
  instruction: string | null;
  ade: number | null;
  outOfBounds: boolean;
  parseTier: number | null;
  failure: string | null;
  wordCount: number | null;
  bucket: string | null;
  waypoints: [number, number][] | null;
  stageTexts: Record<string, string>;
  seed: number;
  timestamp: string;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "plansteer.history.";

export class HistoryStore {
  constructor(private storage: StorageLike) {}

  private key(sceneId: string): string {
    return PREFIX + sceneId;
  }

  load(sceneId: string): Attempt[] {
    const raw = this.storage.getItem(this.key(sceneId));
    if (raw === null) return [];
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? (parsed as Attempt[]) : [];
    } catch {
      return [];
    }
  }

  append(attempt: Attempt): Attempt[] {
    const attempts = [attempt, ...this.load(attempt.sceneId)];
    this.storage.setItem(this.key(attempt.sceneId), JSON.stringify(attempts));
    return attempts;
  }

  clear(sceneId: string): void {
    this.storage.removeItem(this.key(sceneId));
  }
}

export class MemoryStorage implements StorageLike {
  constructor(private map = new Map<string, string>()) {}

  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }

  /** A second storage over the same backing map, like a page reload. */
  reload(): MemoryStorage {
    return new MemoryStorage(this.map);
  }
}
