import type { Job, ScreenReport } from "./api.js";

export const MIN_KEPT = 6;

// Matches the server's own validation wording so the user sees one story.
export const TOO_FEW_MESSAGE =
  "estimation needs at least six images - re-include some first";

export type Badge = "removed" | "restored";

export interface EstimateGate {
  ok: boolean;
  message: string | null;
}

/**
 * Client-side mirror of the curation loop: which images are kept, what
 * the last screen said about each, which jobs are in flight, and the
 * two comparison slots. Everything here is rebuildable from server
 * responses, so a page refresh loses nothing that matters.
 */
export class CurationState {
  readonly imageCount: number;
  private readonly keptSet: Set<number>;
  readonly badges = new Map<number, Badge>();
  readonly activeJobIds = new Set<string>();
  readonly compareSlots: [Job | null, Job | null] = [null, null];

  constructor(imageCount: number) {
    if (!Number.isInteger(imageCount) || imageCount < 1) {
      throw new Error(`bad image count ${imageCount}`);
    }
    this.imageCount = imageCount;
    this.keptSet = new Set<number>();
    for (let i = 1; i <= imageCount; i++) this.keptSet.add(i);
  }

  kept(): number[] {
    return [...this.keptSet].sort((a, b) => a - b);
  }

  keptCount(): number {
    return this.keptSet.size;
  }

  isKept(imageId: number): boolean {
    return this.keptSet.has(imageId);
  }

  /** Flip one image in or out; returns its new kept status. */
  toggle(imageId: number): boolean {
    this.assertInRange(imageId);
    if (this.keptSet.has(imageId)) {
      this.keptSet.delete(imageId);
      return false;
    }
    this.keptSet.add(imageId);
    return true;
  }

  /**
   * Estimation-kind jobs need at least six images; toggling below that
   * is allowed (the operator may be mid-edit) but the actions gray out.
   */
  estimateGate(): EstimateGate {
    if (this.keptSet.size >= MIN_KEPT) return { ok: true, message: null };
    return { ok: false, message: TOO_FEW_MESSAGE };
  }

  selectAll(): void {
    for (let i = 1; i <= this.imageCount; i++) this.keptSet.add(i);
  }

  /**
   * Adopt a screen report's verdict: kept becomes exactly the report's
   * kept set. Returns the image ids whose status actually changed
   * (from an all-kept state that is precisely report.removed).
   */
  applySuggestion(report: ScreenReport): number[] {
    const target = new Set(report.kept);
    const changed: number[] = [];
    for (let i = 1; i <= this.imageCount; i++) {
      const want = target.has(i);
      if (want !== this.keptSet.has(i)) changed.push(i);
      if (want) this.keptSet.add(i);
      else this.keptSet.delete(i);
    }
    this.badges.clear();
    for (const id of report.removed) this.badges.set(id, "removed");
    if (report.restored !== null) this.badges.set(report.restored, "restored");
    return changed;
  }

  private assertInRange(imageId: number): void {
    if (!Number.isInteger(imageId) || imageId < 1 || imageId > this.imageCount) {
      throw new Error(`image id ${imageId} outside 1..${this.imageCount}`);
    }
  }
}
