/** Thin client for the engine's HTTP service.
 *
 * All geometry lives server-side; this module only ships points over and
 * hands answers back.  Fit requests are coalesced: when several edits race,
 * only the answer to the newest request is delivered, older ones resolve to
 * null so the overlay never shows a curve for points the user has already
 * moved past.
 */
import type { FitResponse, ServiceConfig } from "./types.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`service replied ${status}: ${detail}`);
    this.name = "ServiceError";
    this.status = status;
    this.detail = detail;
  }
}

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
  blob(): Promise<Blob>;
}>;

async function errorDetail(res: {
  status: number;
  text(): Promise<string>;
}): Promise<ServiceError> {
  let detail: string;
  try {
    const body = await res.text();
    try {
      const parsed = JSON.parse(body) as { detail?: unknown };
      detail =
        typeof parsed.detail === "string" ? parsed.detail : JSON.stringify(parsed);
    } catch {
      detail = body;
    }
  } catch {
    detail = "(unreadable body)";
  }
  return new ServiceError(res.status, detail);
}

export interface Api {
  health(): Promise<boolean>;
  config(): Promise<ServiceConfig>;
  /** Resolves to the fit, or null when a newer fit request has been issued
   * since (the stale answer is dropped, never delivered). */
  fit(points: [number, number][], nControls: number): Promise<FitResponse | null>;
  preview(body: unknown): Promise<Blob>;
}

export function createApi(
  base: string,
  fetchFn: FetchLike = fetch as unknown as FetchLike,
): Api {
  const root = base.replace(/\/+$/, "");
  let fitSeq = 0;

  return {
    async health(): Promise<boolean> {
      try {
        const res = await fetchFn(`${root}/health`);
        return res.ok;
      } catch {
        return false;
      }
    },

    async config(): Promise<ServiceConfig> {
      const res = await fetchFn(`${root}/config`);
      if (!res.ok) throw await errorDetail(res);
      return (await res.json()) as ServiceConfig;
    },

    async fit(
      points: [number, number][],
      nControls: number,
    ): Promise<FitResponse | null> {
      const seq = ++fitSeq;
      const res = await fetchFn(`${root}/fit`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ points, n_controls: nControls }),
      });
      if (seq !== fitSeq) return null; // a newer edit superseded this request
      if (!res.ok) throw await errorDetail(res);
      const fit = (await res.json()) as FitResponse;
      if (seq !== fitSeq) return null;
      return fit;
    },

    async preview(body: unknown): Promise<Blob> {
      const res = await fetchFn(`${root}/preview`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
      if (!res.ok) throw await errorDetail(res);
      return res.blob();
    },
  };
}
