import type { Candidate, ConceptSummary, Session } from "./types";

// Review view state: everything the screen shows is derived from the last
// session payload plus a local decision basket. The basket never contains a
// token that is not pending, and it survives failed submits so no human
// decision is lost to a network error.

export type Verdict = "accept" | "reject";

export interface ViewState {
  concepts: ConceptSummary[];
  session: Session | null;
  basket: Record<string, Verdict>;
  cursor: number;
  submitting: boolean;
  error: string | null;
  highlightToken: string | null;
}

export const initialState: ViewState = {
  concepts: [],
  session: null,
  basket: {},
  cursor: 0,
  submitting: false,
  error: null,
  highlightToken: null,
};

export type Action =
  | { type: "concepts_loaded"; concepts: ConceptSummary[] }
  | { type: "session_loaded"; session: Session }
  | { type: "stage"; token: string; verdict: Verdict }
  | { type: "unstage"; token: string }
  | { type: "clear_basket" }
  | { type: "move_cursor"; delta: number }
  | { type: "submit_started" }
  | { type: "submit_succeeded"; session: Session }
  | { type: "submit_failed"; message: string; rejectedToken?: string };

export function sortCandidates(pending: Candidate[]): Candidate[] {
  return [...pending].sort(
    (a, b) => b.similarity - a.similarity || a.token.localeCompare(b.token),
  );
}

function pendingTokens(session: Session | null): Set<string> {
  return new Set((session?.pending ?? []).map((c) => c.token));
}

function pruneBasket(basket: Record<string, Verdict>, session: Session | null) {
  const pending = pendingTokens(session);
  const pruned: Record<string, Verdict> = {};
  for (const [token, verdict] of Object.entries(basket)) {
    if (pending.has(token)) {
      pruned[token] = verdict;
    }
  }
  return pruned;
}

export function reduce(state: ViewState, action: Action): ViewState {
  switch (action.type) {
    case "concepts_loaded":
      return { ...state, concepts: action.concepts };
    case "session_loaded":
      // A (re)loaded payload is the whole truth: rebuild the view from it.
      return {
        ...state,
        session: action.session,
        basket: pruneBasket(state.basket, action.session),
        cursor: 0,
        error: null,
        highlightToken: null,
      };
    case "stage": {
      if (!pendingTokens(state.session).has(action.token)) {
        return state;
      }
      return {
        ...state,
        basket: { ...state.basket, [action.token]: action.verdict },
        highlightToken: null,
      };
    }
    case "unstage": {
      const basket = { ...state.basket };
      delete basket[action.token];
      return { ...state, basket };
    }
    case "clear_basket":
      return { ...state, basket: {} };
    case "move_cursor": {
      const count = state.session?.pending.length ?? 0;
      if (count === 0) {
        return { ...state, cursor: 0 };
      }
      const cursor = Math.min(count - 1, Math.max(0, state.cursor + action.delta));
      return { ...state, cursor };
    }
    case "submit_started":
      return { ...state, submitting: true, error: null };
    case "submit_succeeded":
      return {
        ...state,
        session: action.session,
        basket: {},
        cursor: 0,
        submitting: false,
        error: null,
        highlightToken: null,
      };
    case "submit_failed":
      // keep the basket: the reviewer's work must survive the failure
      return {
        ...state,
        submitting: false,
        error: action.message,
        highlightToken: action.rejectedToken ?? null,
      };
    default:
      return state;
  }
}

export function basketLists(state: ViewState): { accepts: string[]; rejects: string[] } {
  const accepts: string[] = [];
  const rejects: string[] = [];
  for (const [token, verdict] of Object.entries(state.basket)) {
    (verdict === "accept" ? accepts : rejects).push(token);
  }
  accepts.sort();
  rejects.sort();
  return { accepts, rejects };
}

export function canSubmit(state: ViewState): boolean {
  return !state.submitting && Object.keys(state.basket).length > 0;
}

export function showFixpointBanner(state: ViewState): boolean {
  return state.session !== null && state.session.fixpoint;
}
