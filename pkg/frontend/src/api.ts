/** Typed client for the campaign HTTP JSON API. */

export interface CurveSample {
  grid: number[];
  values: number[];
}

export interface Suggestion {
  token: string;
  curve: CurveSample;
  aux: number[];
}

export interface Incumbent {
  value: number;
  alpha: number[];
  aux: number[];
  iteration: number;
}

export interface CampaignStatus {
  campaign_id: string;
  current_order: number;
  iterations_completed: number;
  observation_count: number;
  pending_tokens: string[];
  incumbent: Incumbent | null;
  last_trigger: string | null;
  last_suppressed_trigger: string | null;
  negate: boolean;
  max_iterations: number;
  batch_size: number;
  done: boolean;
}

export interface IterationRecord {
  iteration: number;
  order_before: number;
  order_after: number;
  trigger: string;
  suppressed_trigger: string | null;
  incumbent_value: number;
  suggested: { alpha: number[]; aux: number[] }[];
  observed: number[];
}

/** Server error envelope carried through to the UI verbatim. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const err = body?.error ?? {};
    throw new ApiError(
      response.status,
      err.code ?? 'unknown',
      err.message ?? `request failed with status ${response.status}`,
    );
  }
  return body as T;
}

export class CampaignApi {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  async createCampaign(config: Record<string, unknown>): Promise<CampaignStatus> {
    const response = await fetch(this.url('/campaigns'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(config),
    });
    return parseOrThrow<CampaignStatus>(response);
  }

  async getStatus(id: string): Promise<CampaignStatus> {
    return parseOrThrow<CampaignStatus>(await fetch(this.url(`/campaigns/${id}`)));
  }

  async getHistory(id: string): Promise<IterationRecord[]> {
    const body = await parseOrThrow<{ records: IterationRecord[] }>(
      await fetch(this.url(`/campaigns/${id}/history`)),
    );
    return body.records;
  }

  async ask(id: string): Promise<Suggestion[]> {
    const body = await parseOrThrow<{ suggestions: Suggestion[] }>(
      await fetch(this.url(`/campaigns/${id}/ask`), { method: 'POST' }),
    );
    return body.suggestions;
  }

  async tell(id: string, scores: Record<string, number>): Promise<CampaignStatus> {
    const response = await fetch(this.url(`/campaigns/${id}/tell`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(scores),
    });
    return parseOrThrow<CampaignStatus>(response);
  }

  async getCurve(
    id: string,
    which: 'incumbent' | 'suggestion',
    grid = 101,
    index = 0,
  ): Promise<CurveSample> {
    const params = new URLSearchParams({ which, grid: String(grid), index: String(index) });
    return parseOrThrow<CurveSample>(
      await fetch(this.url(`/campaigns/${id}/curve?${params}`)),
    );
  }
}
