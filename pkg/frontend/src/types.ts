// Wire types for the /v1 review API.

export interface ConceptSummary {
  concept_id: string;
  canonical: string;
  accepted: string[];
  rejected: string[];
  has_session: boolean;
}

export interface Candidate {
  token: string;
  similarity: number;
  query_term: string;
  snippets: string[];
}

export interface ReviewRound {
  iteration: number;
  proposed: string[];
  accepted: string[];
  rejected: string[];
}

export interface Session {
  session_id: string;
  concept_id: string;
  iteration: number;
  pending: Candidate[];
  fixpoint: boolean;
  accepted: string[];
  rejected: string[];
  history: ReviewRound[];
  warnings: string[];
}

export interface ApiError {
  code: string;
  message: string;
}
