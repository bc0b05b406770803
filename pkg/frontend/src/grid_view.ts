import type { DatasetSummary } from "./api.js";
import type { CurationState } from "./state.js";

export interface GridViewHooks {
  thumbUrl(imageId: number): string;
  onToggle(imageId: number): void;
}

/**
 * Rebuild the thumbnail grid from scratch. Rebuilding (rather than
 * patching) keeps the view a pure function of state, which is what
 * makes refresh and job replay safe.
 */
export function renderImageGrid(
  container: HTMLElement,
  dataset: DatasetSummary,
  state: CurationState,
  hooks: GridViewHooks,
): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  for (const image of dataset.images) {
    const tile = doc.createElement("figure");
    const kept = state.isKept(image.id);
    tile.className = kept ? "tile kept" : "tile excluded";
    tile.dataset.imageId = String(image.id);

    const img = doc.createElement("img");
    img.src = hooks.thumbUrl(image.id);
    img.alt = image.name;
    tile.appendChild(img);

    const caption = doc.createElement("figcaption");
    caption.textContent = `#${image.id}`;
    const badge = state.badges.get(image.id);
    if (badge !== undefined) {
      const mark = doc.createElement("span");
      mark.className = `trace-badge ${badge}`;
      mark.textContent = badge;
      caption.appendChild(mark);
    }
    tile.appendChild(caption);

    tile.addEventListener("click", () => hooks.onToggle(image.id));
    container.appendChild(tile);
  }
}

/** Update the kept-count line and the gating message under the grid. */
export function renderKeptStatus(
  counter: HTMLElement,
  message: HTMLElement,
  state: CurationState,
  runButtons: HTMLButtonElement[],
): void {
  counter.textContent = `${state.keptCount()} of ${state.imageCount} images kept`;
  const gate = state.estimateGate();
  message.textContent = gate.message ?? "";
  message.hidden = gate.ok;
  for (const button of runButtons) button.disabled = !gate.ok;
}
