/**
 * Typed client for the marketplace node's HTTP API.
 *
 * The dashboard talks to nothing else: every piece of state on screen came
 * through one of these calls. `fetch` is injectable so tests can run
 * without a live node or a browser.
 */

export interface PriceQuote {
  price_microalgo: number;
}

export interface NamesResponse {
  names: string[];
  stale: boolean;
}

export interface SubmitResponse {
  txn_id: string;
}

export interface Update {
  txn_id: string;
  op: string;
  args: Record<string, string>;
  amount: number;
  sender: string;
  timestamp: number;
}

export interface HistoryEntry {
  id: string;
  sender: string;
  receiver: string;
  amount: number;
  round: number;
  timestamp: number;
  note: string;
  op?: string;
  args?: Record<string, string>;
}

export interface StageResponse {
  ds_link: string;
  ds_size: number;
}

export interface FaucetResponse {
  txn_id: string;
  address: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class MarketApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, (body as { error?: string }).error ?? response.statusText);
    }
    return body as T;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getPrice(kind: string, params: Record<string, string>): Promise<PriceQuote> {
    const query = new URLSearchParams({ kind, ...params });
    return this.request<PriceQuote>(`/api/price?${query}`);
  }

  getNames(kind: "datasets" | "models"): Promise<NamesResponse> {
    return this.request<NamesResponse>(`/api/names?kind=${kind}`);
  }

  submit(
    user: string,
    op: string,
    args: Record<string, string>,
    maxPrice?: number,
  ): Promise<SubmitResponse> {
    const payload: Record<string, unknown> = { user, op, args };
    if (maxPrice !== undefined) payload["max_price"] = maxPrice;
    return this.post<SubmitResponse>("/api/submit", payload);
  }

  getUpdates(user: string): Promise<{ updates: Update[] }> {
    return this.request<{ updates: Update[] }>(`/api/updates?user=${encodeURIComponent(user)}`);
  }

  getHistory(address: string): Promise<{ transactions: HistoryEntry[] }> {
    return this.request<{ transactions: HistoryEntry[] }>(
      `/api/history?address=${encodeURIComponent(address)}`,
    );
  }

  stage(dataBase64: string): Promise<StageResponse> {
    return this.post<StageResponse>("/api/stage", { data_b64: dataBase64 });
  }

  faucet(user: string, amount: number): Promise<FaucetResponse> {
    return this.post<FaucetResponse>("/api/faucet", { user, amount });
  }

  getUsers(): Promise<{ users: Record<string, string> }> {
    return this.request<{ users: Record<string, string> }>("/api/users");
  }
}
