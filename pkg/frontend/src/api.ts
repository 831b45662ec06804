// Typed client for the planning service. All numbers shown in the UI come
// from these payloads; the frontend never recomputes trajectory math.

export interface SceneSummary {
  scene_id: string;
  frame_count: number;
  has_ground_truth: boolean;
}

export interface SceneDetail {
  scene_id: string;
  dt_seconds: number;
  horizon: number;
  bounds: { min_x: number; min_y: number; max_x: number; max_y: number };
  ego_history: { t: number; x: number; y: number; heading: number; speed: number }[];
  ground_truth: [number, number][];
  frames: { url: string; t: number }[];
  annotations: {
    annotation_id: string;
    annotator_id: string;
    text: string;
    refs_static: boolean;
    refs_dynamic: boolean;
    actionable: boolean;
    referentiality: string;
  }[];
}

export interface PlanResponse {
  scene_id: string;
  condition: "baseline" | "instructed";
  instruction: string | null;
  seed: number;
  stage_texts: Record<string, string>;
  prompt_audit: Record<string, string>;
  speeds: number[] | null;
  curvatures: number[] | null;
  ego_waypoints: [number, number][] | null;
  waypoints: [number, number][] | null;
  ade: number | null;
  out_of_bounds: boolean;
  parse_tier: number | null;
  clamp_count: number;
  failure: string | null;
  word_count: number | null;
  length_bucket: string | null;
  referentiality: string | null;
  elapsed_s: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  frameUrl(path: string): string {
    return this.baseUrl + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // non-JSON error bodies fall through to the status check
    }
    if (!response.ok) {
      const message =
        body && typeof body === "object" && "message" in body
          ? String((body as { message: unknown }).message)
          : `HTTP ${response.status}`;
      throw new ApiError(response.status, message);
    }
    return body as T;
  }

  listScenes(): Promise<SceneSummary[]> {
    return this.request<SceneSummary[]>("/api/scenes");
  }

  sceneDetail(sceneId: string): Promise<SceneDetail> {
    return this.request<SceneDetail>(`/api/scenes/${encodeURIComponent(sceneId)}`);
  }

  plan(sceneId: string, body: { instruction?: string; seed?: number }): Promise<PlanResponse> {
    return this.request<PlanResponse>(
      `/api/scenes/${encodeURIComponent(sceneId)}/plan`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
  }
}
