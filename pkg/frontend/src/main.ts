// DOM bootstrap: wires the controller to the scene list, canvas, instruction
// console, history list, and the what-if comparison strip.

import { ApiClient } from "./api.js";
import { bucketLabel, wordCount } from "./buckets.js";
import { PlaygroundController } from "./controller.js";
import { colorFor, renderScene } from "./draw.js";
import { HistoryStore } from "./history.js";
import { Attempt } from "./history.js";
import { expand, fitBounds, including } from "./transform.js";

const params = new URLSearchParams(window.location.search);
const API_BASE = params.get("api") ?? "http://127.0.0.1:8777";

const api = new ApiClient(API_BASE);
const controller = new PlaygroundController(api, new HistoryStore(window.localStorage));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const sceneList = el<HTMLUListElement>("scene-list");
const banner = el<HTMLDivElement>("banner");
const notice = el<HTMLDivElement>("notice");
const frameStrip = el<HTMLDivElement>("frame-strip");
const canvas = el<HTMLCanvasElement>("scene-canvas");
const instructionBox = el<HTMLTextAreaElement>("instruction");
const draftInfo = el<HTMLSpanElement>("draft-info");
const baselineBtn = el<HTMLButtonElement>("run-baseline");
const sendBtn = el<HTMLButtonElement>("send-instruction");
const clearBtn = el<HTMLButtonElement>("clear-history");
const historyList = el<HTMLUListElement>("history");
const compareStrip = el<HTMLDivElement>("compare-strip");
const stagePanel = el<HTMLDetailsElement>("stage-panel");
const stageTexts = el<HTMLPreElement>("stage-texts");
const sceneTitle = el<HTMLHeadingElement>("scene-title");

function fmtAde(ade: number | null): string {
  return ade === null ? "failed" : ade.toFixed(3) + " m";
}

function renderBanner(): void {
  const state = controller.state;
  banner.hidden = state.banner === null;
  if (state.banner !== null) {
    banner.replaceChildren();
    banner.append(state.banner + " ");
    const retry = document.createElement("button");
    retry.textContent = "Retry";
    retry.onclick = () => void controller.loadScenes();
    banner.append(retry);
  }
  notice.hidden = state.notice === null;
  notice.textContent = state.notice ?? "";
}

function renderSceneList(): void {
  sceneList.replaceChildren();
  for (const scene of controller.state.scenes) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = `${scene.scene_id} (${scene.frame_count} frames)`;
    button.classList.toggle(
      "selected", controller.state.selected?.scene_id === scene.scene_id,
    );
    button.onclick = () => void controller.selectScene(scene.scene_id);
    item.append(button);
    sceneList.append(item);
  }
}

function renderFrames(): void {
  frameStrip.replaceChildren();
  const scene = controller.state.selected;
  if (scene === null) return;
  for (const frame of scene.frames) {
    const img = document.createElement("img");
    img.src = api.frameUrl(frame.url);
    img.title = `t = ${frame.t.toFixed(1)} s`;
    frameStrip.append(img);
  }
}

function renderCanvas(): void {
  const scene = controller.state.selected;
  const ctx = canvas.getContext("2d");
  if (scene === null || ctx === null) return;
  const visible = controller.visibleAttempts();
  // Zoom out when any visible attempt escapes the scene rectangle.
  let world = expand(scene.bounds, 5);
  for (const attempt of visible) {
    if (attempt.waypoints !== null) {
      world = including(world, attempt.waypoints);
    }
  }
  const view = fitBounds(world, canvas.width, canvas.height, 18);
  const last = scene.ego_history[scene.ego_history.length - 1];
  renderScene(ctx, view, {
    bounds: scene.bounds,
    groundTruth: scene.ground_truth,
    ego: last ? { position: [last.x, last.y], heading: last.heading } : null,
  }, visible);
}

function attemptLabel(attempt: Attempt): string {
  const what = attempt.condition === "baseline"
    ? "baseline"
    : `"${attempt.instruction ?? ""}"`;
  const oob = attempt.outOfBounds ? " [out of bounds]" : "";
  return `${what} — ADE ${fmtAde(attempt.ade)}${oob}`;
}

function renderHistory(): void {
  const state = controller.state;
  historyList.replaceChildren();
  const visible = controller.visibleAttempts();
  state.attempts.forEach((attempt) => {
    const row = document.createElement("li");
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    const visibleIndex = visible.indexOf(attempt);
    swatch.style.background = visibleIndex >= 0 ? colorFor(visibleIndex) : "#ccc";
    row.append(swatch);

    const show = document.createElement("input");
    show.type = "checkbox";
    show.checked = state.visibleAttemptIds.has(attempt.id);
    show.title = "show overlay";
    show.onchange = () => controller.toggleOverlay(attempt.id);
    row.append(show);

    const text = document.createElement("span");
    const bucket = attempt.bucket !== null ? ` · ${attempt.bucket}` : "";
    text.textContent = ` ${attemptLabel(attempt)}${bucket} · ${attempt.timestamp}`;
    if (attempt.failure !== null) {
      text.textContent += ` · ${attempt.failure}`;
      row.classList.add("failed");
    }
    text.onclick = () => {
      stagePanel.open = true;
      stageTexts.textContent = Object.entries(attempt.stageTexts)
        .map(([stage, value]) => `=== ${stage} ===\n${value}`)
        .join("\n\n");
    };
    row.append(text);

    const compare = document.createElement("button");
    compare.textContent = state.compareIds.includes(attempt.id)
      ? "comparing"
      : "compare";
    compare.disabled = !controller.comparisonEnabled;
    compare.onclick = () => controller.toggleCompare(attempt.id);
    row.append(compare);

    historyList.append(row);
  });
}

function renderComparison(): void {
  compareStrip.replaceChildren();
  if (!controller.comparisonEnabled) {
    compareStrip.textContent = "Run at least two attempts to compare phrasings.";
    return;
  }
  const pair = controller.comparison();
  if (pair === null) {
    compareStrip.textContent = "Pick two attempts with the compare buttons.";
    return;
  }
  for (const entry of pair) {
    const card = document.createElement("div");
    card.className = "compare-card";
    const title = document.createElement("strong");
    title.textContent = entry.attempt.condition === "baseline"
      ? "baseline"
      : `"${entry.attempt.instruction ?? ""}"`;
    const rows = [
      `ADE: ${fmtAde(entry.attempt.ade)}`,
      `bucket: ${entry.bucket ?? "n/a"} (${entry.attempt.wordCount ?? 0} words)`,
      `referentiality guess: ${entry.referentialityGuess}`,
      entry.attempt.outOfBounds ? "went out of bounds" : "stayed in bounds",
    ];
    card.append(title);
    for (const line of rows) {
      const p = document.createElement("div");
      p.textContent = line;
      card.append(p);
    }
    compareStrip.append(card);
  }
}

function renderButtons(): void {
  const state = controller.state;
  const haveScene = state.selected !== null;
  baselineBtn.disabled = state.pending || !haveScene;
  sendBtn.disabled = state.pending || !haveScene;
  clearBtn.disabled = !haveScene || state.attempts.length === 0;
  sceneTitle.textContent = state.selected?.scene_id ?? "pick a scene";
  const words = wordCount(instructionBox.value);
  draftInfo.textContent = instructionBox.value.trim() === ""
    ? ""
    : `${words} words · ${bucketLabel(words)}`;
}

function render(): void {
  renderBanner();
  renderSceneList();
  renderFrames();
  renderCanvas();
  renderHistory();
  renderComparison();
  renderButtons();
}

controller.onChange(render);

baselineBtn.onclick = () => void controller.runBaseline();
sendBtn.onclick = () => void controller.sendInstruction(instructionBox.value);
clearBtn.onclick = () => controller.clearHistory();
instructionBox.oninput = renderButtons;

void controller.loadScenes();
render();
