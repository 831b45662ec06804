// DOM-free playground state machine: scene selection, plan requests (one in
// flight at a time), attempt history, overlay visibility, and the two-slot
// what-if comparison. The view layer subscribes and re-renders.

import { ApiClient, ApiError, PlanResponse, SceneDetail, SceneSummary } from "./api.js";
import { Attempt, HistoryStore } from "./history.js";

export interface ComparisonEntry {
  attempt: Attempt;
  bucket: string | null;
  referentialityGuess: string;
}

export interface PlaygroundState {
  scenes: SceneSummary[];
  selected: SceneDetail | null;
  attempts: Attempt[];
  visibleAttemptIds: Set<string>;
  compareIds: string[]; // at most two
  pending: boolean;
  banner: string | null; // service-level problems, with retry
  notice: string | null; // per-request problems, inline
}

export type RunResult =
  | { ok: true; attempt: Attempt }
  | { ok: false; reason: "empty" | "busy" | "error"; message: string };

import { guessReferentiality } from "./buckets.js";

export class PlaygroundController {
  readonly state: PlaygroundState = {
    scenes: [],
    selected: null,
    attempts: [],
    visibleAttemptIds: new Set(),
    compareIds: [],
    pending: false,
    banner: null,
    notice: null,
  };

  private listeners: (() => void)[] = [];
  private counter = 0;

  constructor(
    private api: ApiClient,
    private history: HistoryStore,
    private now: () => string = () => new Date().toISOString(),
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async loadScenes(): Promise<void> {
    try {
      this.state.scenes = await this.api.listScenes();
      this.state.banner = null;
    } catch (err) {
      this.state.banner = err instanceof ApiError
        ? `Cannot reach the planning service: ${err.message}`
        : String(err);
    }
    this.notify();
  }

  async selectScene(sceneId: string): Promise<void> {
    try {
      this.state.selected = await this.api.sceneDetail(sceneId);
      this.state.attempts = this.history.load(sceneId);
      this.state.visibleAttemptIds = new Set(
        this.state.attempts.slice(0, 2).map((a) => a.id),
      );
      this.state.compareIds = [];
      this.state.notice = null;
      this.state.banner = null;
    } catch (err) {
      this.state.banner = err instanceof ApiError
        ? `Cannot load scene: ${err.message}`
        : String(err);
    }
    this.notify();
  }

  runBaseline(seed?: number): Promise<RunResult> {
    return this.run({}, null, seed);
  }

  sendInstruction(text: string, seed?: number): Promise<RunResult> {
    if (text.trim() === "") {
      this.state.notice = "Type an instruction first (or run the baseline).";
      this.notify();
      return Promise.resolve({
        ok: false, reason: "empty", message: this.state.notice,
      });
    }
    return this.run({ instruction: text }, text, seed);
  }

  private async run(
    body: { instruction?: string; seed?: number },
    instruction: string | null,
    seed?: number,
  ): Promise<RunResult> {
    const scene = this.state.selected;
    if (scene === null) {
      return { ok: false, reason: "error", message: "no scene selected" };
    }
    if (this.state.pending) {
      return { ok: false, reason: "busy", message: "a plan request is already running" };
    }
    if (seed !== undefined) body.seed = seed;
    this.state.pending = true;
    this.state.notice = null;
    this.notify();
    try {
      const plan = await this.api.plan(scene.scene_id, body);
      const attempt = this.attemptFrom(plan, instruction);
      this.state.attempts = this.history.append(attempt);
      this.state.visibleAttemptIds.add(attempt.id);
      return { ok: true, attempt };
    } catch (err) {
      const message = err instanceof ApiError
        ? (err.status === 409 ? "planner busy" : err.message)
        : String(err);
      this.state.notice = message;
      return { ok: false, reason: "error", message };
    } finally {
      this.state.pending = false;
      this.notify();
    }
  }

  private attemptFrom(plan: PlanResponse, instruction: string | null): Attempt {
    this.counter += 1;
    return {
      id: `${plan.scene_id}-${Date.now()}-${this.counter}`,
      sceneId: plan.scene_id,
      condition: plan.condition,
      instruction,
      ade: plan.ade,
      outOfBounds: plan.out_of_bounds,
      parseTier: plan.parse_tier,
      failure: plan.failure,
      wordCount: plan.word_count,
      bucket: plan.length_bucket,
      waypoints: plan.waypoints,
      stageTexts: plan.stage_texts,
      seed: plan.seed,
      timestamp: this.now(),
    };
  }

  toggleOverlay(attemptId: string): void {
    if (this.state.visibleAttemptIds.has(attemptId)) {
      this.state.visibleAttemptIds.delete(attemptId);
    } else {
      this.state.visibleAttemptIds.add(attemptId);
    }
    this.notify();
  }

  toggleCompare(attemptId: string): void {
    const ids = this.state.compareIds;
    const at = ids.indexOf(attemptId);
    if (at >= 0) {
      ids.splice(at, 1);
    } else {
      ids.push(attemptId);
      if (ids.length > 2) ids.shift();
      this.state.visibleAttemptIds.add(attemptId);
    }
    this.notify();
  }

  get comparisonEnabled(): boolean {
    return this.state.attempts.length >= 2;
  }

  comparison(): [ComparisonEntry, ComparisonEntry] | null {
    if (this.state.compareIds.length !== 2) return null;
    const byId = new Map(this.state.attempts.map((a) => [a.id, a]));
    const picked = this.state.compareIds.map((id) => byId.get(id));
    if (picked.some((a) => a === undefined)) return null;
    const [a, b] = picked as [Attempt, Attempt];
    const entry = (attempt: Attempt): ComparisonEntry => ({
      attempt,
      bucket: attempt.bucket,
      referentialityGuess: guessReferentiality(attempt.instruction ?? ""),
    });
    return [entry(a), entry(b)];
  }

  visibleAttempts(): Attempt[] {
    return this.state.attempts.filter((a) => this.state.visibleAttemptIds.has(a.id));
  }

  clearHistory(): void {
    const scene = this.state.selected;
    if (scene === null) return;
    this.history.clear(scene.scene_id);
    this.state.attempts = [];
    this.state.visibleAttemptIds = new Set();
    this.state.compareIds = [];
    this.notify();
  }
}
