// Display helpers for instruction phrasing: word-length buckets and a rough
// referentiality guess. The service's labels win when present; these cover
// text the service has not scored yet (e.g. the draft in the textarea).

export function wordCount(text: string): number {
  const trimmed = text.trim();
  return trimmed === "" ? 0 : trimmed.split(/\s+/).length;
}

export function bucketLabel(words: number): string {
  if (words <= 4) return "Ultra-Short";
  if (words <= 8) return "Short";
  if (words <= 12) return "Typical";
  if (words <= 18) return "Descriptive";
  return "Long";
}

const DYNAMIC_WORDS = [
  "car", "cars", "vehicle", "vehicles", "truck", "van", "bus", "taxi",
  "pedestrian", "pedestrians", "cyclist", "bike", "biker", "people",
  "person", "traffic", "driver",
];

const STATIC_WORDS = [
  "intersection", "crosswalk", "sign", "signs", "light", "lights",
  "stoplight", "curb", "lane", "lanes", "road", "street", "corner",
  "ramp", "exit", "parking", "roundabout", "median", "sidewalk",
];

function containsAny(tokens: string[], vocabulary: string[]): boolean {
  return tokens.some((t) => vocabulary.includes(t));
}

export function guessReferentiality(text: string): string {
  const tokens = text.toLowerCase().split(/[^a-z]+/).filter((t) => t !== "");
  const dynamic = containsAny(tokens, DYNAMIC_WORDS);
  const isStatic = containsAny(tokens, STATIC_WORDS);
  if (dynamic && isStatic) return "Static + Dynamic";
  if (dynamic) return "Dynamic Only";
  if (isStatic) return "Static Only";
  return "None (Non-ref)";
}
