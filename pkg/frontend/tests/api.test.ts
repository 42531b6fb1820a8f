import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, assertUnitInterval } from "../src/api.js";

interface Recorded {
  url: string;
  init?: RequestInit;
}

function stubFetch(status: number, body: unknown): { calls: Recorded[]; fn: typeof fetch } {
  const calls: Recorded[] = [];
  const fn = (async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return { calls, fn };
}

describe("assertUnitInterval", () => {
  it("accepts endpoints and interior values", () => {
    expect(() => assertUnitInterval([0, 0.5, 1])).not.toThrow();
  });

  it("rejects out-of-range and non-finite values", () => {
    expect(() => assertUnitInterval([-0.001])).toThrow(RangeError);
    expect(() => assertUnitInterval([1.001])).toThrow(RangeError);
    expect(() => assertUnitInterval([Number.NaN])).toThrow(RangeError);
    expect(() => assertUnitInterval([Number.POSITIVE_INFINITY])).toThrow(RangeError);
  });
});

describe("ApiClient", () => {
  it("never sends an attribute vector outside [0, 1]", async () => {
    const { calls, fn } = stubFetch(200, {});
    const client = new ApiClient("http://svc", fn);
    const bad = Array(12).fill(0.5);
    bad[3] = 1.5;
    await expect(client.hallucinate({ lr_image: "X", attributes: bad })).rejects.toThrow(
      RangeError,
    );
    expect(calls).toHaveLength(0);
  });

  it("posts the hallucinate body as-is once validated", async () => {
    const { calls, fn } = stubFetch(200, { outputs: { "128": "Y" } });
    const client = new ApiClient("http://svc/", fn);
    await client.hallucinate({
      lr_image: "X",
      attributes: Array(12).fill(1),
      return_stages: true,
      return_attribute_predictions: true,
    });
    expect(calls).toHaveLength(1);
    expect(calls[0]?.url).toBe("http://svc/hallucinate");
    const sent = JSON.parse(String(calls[0]?.init?.body));
    expect(sent.attributes).toEqual(Array(12).fill(1));
    expect(sent.return_stages).toBe(true);
  });

  it("allows omitting attributes so the service falls back to the classifier", async () => {
    const { calls, fn } = stubFetch(200, { outputs: { "128": "Y" } });
    const client = new ApiClient("http://svc", fn);
    await client.hallucinate({ lr_image: "X" });
    const sent = JSON.parse(String(calls[0]?.init?.body));
    expect("attributes" in sent).toBe(false);
  });

  it("surfaces service errors with their code and message", async () => {
    const { fn } = stubFetch(400, { code: "bad_lr_shape", message: "LR input must be 16x16" });
    const client = new ApiClient("http://svc", fn);
    const err = await client.classify("X").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("bad_lr_shape");
    expect((err as ApiError).message).toMatch(/16x16/);
    expect((err as ApiError).status).toBe(400);
  });

  it("wraps network failures as ApiError", async () => {
    const fn = (async () => {
      throw new TypeError("fetch failed");
    }) as unknown as typeof fetch;
    const client = new ApiClient("http://svc", fn);
    const err = await client.health().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("network_error");
  });

  it("parses the bare attribute-name list", async () => {
    const { calls, fn } = stubFetch(200, ["Black Hair", "Young"]);
    const client = new ApiClient("http://svc", fn);
    expect(await client.attributes()).toEqual(["Black Hair", "Young"]);
    expect(calls[0]?.url).toBe("http://svc/attributes");
  });
});
