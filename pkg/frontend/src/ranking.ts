/**
 * Pure click-to-rank state machine.
 *
 * States are immutable: every transition returns a new state, or the same
 * object when the action is a no-op. Because clicks on served items are
 * the only way to extend the ranking and duplicates are rejected, a
 * complete state is always a full permutation of the served items —
 * malformed submissions are impossible by construction.
 */

export interface RankingState {
  readonly items: readonly string[];
  readonly ranked: readonly string[];
}

export function createState(items: readonly string[]): RankingState {
  if (new Set(items).size !== items.length) {
    throw new Error("query items must be unique");
  }
  return { items: [...items], ranked: [] };
}

/** Append `id` to the ranking; clicking an already-ranked item is a no-op. */
export function click(state: RankingState, id: string): RankingState {
  if (!state.items.includes(id)) {
    throw new Error(`unknown item ${JSON.stringify(id)}`);
  }
  if (state.ranked.includes(id)) {
    return state;
  }
  return { items: state.items, ranked: [...state.ranked, id] };
}

/** Remove the most recent selection only; no-op on an empty ranking. */
export function undo(state: RankingState): RankingState {
  if (state.ranked.length === 0) {
    return state;
  }
  return { items: state.items, ranked: state.ranked.slice(0, -1) };
}

export function isComplete(state: RankingState): boolean {
  return state.ranked.length === state.items.length;
}

/** 1-based position of `id` in the ranking, or null when unranked. */
export function rankOf(state: RankingState, id: string): number | null {
  const index = state.ranked.indexOf(id);
  return index === -1 ? null : index + 1;
}
