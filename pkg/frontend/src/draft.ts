// Draft state plus the debounced live re-rank loop.
//
// Edits debounce into one recommend call; responses superseded by a newer
// edit are discarded; request failures surface as a non-blocking banner
// while the last good ranking stays visible. The controller never submits
// a request that violates the server's validation rules.

import { ApiClient, ApiError } from "./api.js";
import type { RecommendRequest, RecommendResponse } from "./types.js";

export const DEFAULT_DEBOUNCE_MS = 400;
export const MIN_K = 1;
export const MAX_K = 20;

export interface DraftState {
  title: string;
  abstract: string;
  keywords: string[];
  k: number;
  lastResponse: RecommendResponse | null;
  inFlight: boolean;
  validationMessage: string | null;
  errorBanner: string | null;
}

export type DraftListener = (state: DraftState) => void;

/** Mirror of the server rule: at least one field with a word of letters. */
export function draftHasContent(state: Pick<DraftState, "title" | "abstract" | "keywords">): boolean {
  const text = [state.title, state.abstract, state.keywords.join(" ")].join(" ");
  return /[a-zA-Z]/.test(text);
}

export class DraftController {
  readonly state: DraftState = {
    title: "",
    abstract: "",
    keywords: [],
    k: 10,
    lastResponse: null,
    inFlight: false,
    validationMessage: null,
    errorBanner: null,
  };

  private timer: ReturnType<typeof setTimeout> | null = null;
  private editVersion = 0;
  private listeners: DraftListener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly debounceMs: number = DEFAULT_DEBOUNCE_MS,
  ) {}

  subscribe(listener: DraftListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  setTitle(value: string): void {
    this.state.title = value;
    this.scheduleRerank();
  }

  setAbstract(value: string): void {
    this.state.abstract = value;
    this.scheduleRerank();
  }

  addKeyword(tag: string): void {
    const cleaned = tag.trim();
    if (!cleaned || this.state.keywords.includes(cleaned)) return;
    this.state.keywords.push(cleaned);
    this.scheduleRerank();
  }

  removeKeyword(tag: string): void {
    const index = this.state.keywords.indexOf(tag);
    if (index < 0) return;
    this.state.keywords.splice(index, 1);
    this.scheduleRerank();
  }

  setK(value: number): void {
    this.state.k = Math.min(MAX_K, Math.max(MIN_K, Math.round(value)));
    this.scheduleRerank();
  }

  snapshotRequest(): RecommendRequest {
    return {
      title: this.state.title,
      abstract: this.state.abstract,
      keywords: [...this.state.keywords],
      k: this.state.k,
    };
  }

  /** Edits collapse into one request per quiet period. */
  scheduleRerank(): void {
    this.editVersion += 1;
    if (this.timer !== null) clearTimeout(this.timer);
    if (!draftHasContent(this.state)) {
      // client-side precondition: no request leaves the browser
      this.state.validationMessage = "Enter a title, abstract, or keyword first.";
      this.state.inFlight = false;
      this.notify();
      return;
    }
    this.state.validationMessage = null;
    this.notify();
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  private async fire(): Promise<void> {
    const version = this.editVersion;
    this.state.inFlight = true;
    this.notify();
    try {
      const response = await this.api.recommend(this.snapshotRequest());
      if (version !== this.editVersion) return; // superseded by a newer edit
      this.state.lastResponse = response;
      this.state.errorBanner = null;
    } catch (err) {
      if (version !== this.editVersion) return;
      // non-blocking: keep the last good ranking visible
      this.state.errorBanner =
        err instanceof ApiError ? err.message : "Service unreachable.";
    } finally {
      if (version === this.editVersion) this.state.inFlight = false;
      this.notify();
    }
  }

  /** Test hook: resolve once no request is pending or in flight. */
  async settled(pollMs = 5): Promise<void> {
    while (this.timer !== null || this.state.inFlight) {
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }
}
