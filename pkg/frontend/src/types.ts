/** Wire types for the hallucination service HTTP API. */

export interface HealthResponse {
  status: string;
  checkpoint: string;
  stage: number;
}

export interface ClassifyResponse {
  attributes: number[];
}

export interface HallucinateRequest {
  lr_image: string;
  attributes?: number[] | null;
  return_stages?: boolean;
  return_attribute_predictions?: boolean;
}

/** Keys are resolutions as strings: "32" and "64" only when stages were requested. */
export interface HallucinateResponse {
  outputs: Record<string, string>;
  used_attributes: number[];
  classifier_attributes: number[];
  critic_attribute_predictions?: Record<string, number[]>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
