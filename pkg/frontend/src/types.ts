// Wire types mirroring the service API exactly.

export interface RecommendRequest {
  title: string;
  abstract: string;
  keywords: string[];
  k: number;
  use_scopes?: boolean | null;
}

export interface RankedItem {
  journal_id: string;
  name: string;
  score: number;
}

export interface ModelInfo {
  combo: string;
  architecture: string;
  artifact_hash: string;
}

export interface RecommendResponse {
  items: RankedItem[];
  model_info: ModelInfo;
}

export interface JournalInfo {
  journal_id: string;
  name: string;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}
