/** Typed client for the completion service HTTP API. */

import type { Toggles } from "./attributes.js";

export interface ModelInfo {
  stage: number;
  attributes: string[];
  version: number;
}

export interface CompletionResult {
  pngBytes: Uint8Array;
  /** Attribute vector the service reports having consumed. */
  echoedAttributes: Record<string, number>;
}

export interface ServiceError {
  status: number;
  code: string;
  message: string;
}

type FetchLike = typeof fetch;

export class CompletionApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  async modelInfo(): Promise<ModelInfo> {
    const res = await this.fetchImpl(`${this.baseUrl}/model`);
    if (!res.ok) throw await this.asError(res);
    return (await res.json()) as ModelInfo;
  }

  async complete(imagePng: BlobPart, maskPng: Uint8Array, toggles: Toggles): Promise<CompletionResult> {
    const form = new FormData();
    form.append("image", new Blob([imagePng], { type: "image/png" }), "image.png");
    form.append("mask", new Blob([maskPng.slice().buffer], { type: "image/png" }), "mask.png");
    form.append("attributes", JSON.stringify(toggles));
    const res = await this.fetchImpl(`${this.baseUrl}/complete`, { method: "POST", body: form });
    if (!res.ok) throw await this.asError(res);
    const echoed = res.headers.get("X-Attribute-Vector");
    return {
      pngBytes: new Uint8Array(await res.arrayBuffer()),
      echoedAttributes: echoed ? JSON.parse(echoed) : {},
    };
  }

  private async asError(res: Response): Promise<ServiceError> {
    let code = "http_error";
    let message = `${res.status} ${res.statusText}`;
    try {
      const body = await res.json();
      if (body && typeof body.code === "string") code = body.code;
      if (body && typeof body.message === "string") message = body.message;
    } catch {
      // non-JSON error body; keep the status line
    }
    return { status: res.status, code, message };
  }
}
