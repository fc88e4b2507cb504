import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ApiClient, ServiceError } from "../src/api.js";

const contract = JSON.parse(
  readFileSync(
    fileURLToPath(new URL("../../api-contract.json", import.meta.url)),
    "utf-8",
  ),
);

interface Call {
  url: string;
  method: string;
  body: unknown;
}

function mockClient(status: number, payload: unknown) {
  const calls: Call[] = [];
  const client = new ApiClient("http://svc", async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    return new Response(JSON.stringify(payload), { status });
  });
  return { client, calls };
}

function contractPaths(): Set<string> {
  return new Set(
    contract.endpoints.map((e: any) => `${e.method} ${e.path}`),
  );
}

describe("client follows the committed contract", () => {
  it("every request matches a contract endpoint", async () => {
    const { client, calls } = mockClient(200, {});
    await client.getSession("s");
    await client.sendCommand("s", "go");
    await client.step("s");
    await client.run("s", 5);
    await client.validate("s", "<root/>");
    const paths = contractPaths();
    for (const call of calls) {
      const templated = call.url
        .replace("http://svc", "")
        .replace(/\/s(?=\/|$)/, "/{session_id}");
      expect(paths.has(`${call.method} ${templated}`)).toBe(true);
    }
  });

  it("createSession posts library and optional world", async () => {
    const { client, calls } = mockClient(201, { session_id: "abc" });
    const result = await client.createSession({ nodes: [] }, { fact_mode: true });
    expect(result.session_id).toBe("abc");
    expect(calls[0]).toEqual({
      url: "http://svc/sessions",
      method: "POST",
      body: { library: { nodes: [] }, world: { fact_mode: true } },
    });
  });

  it("run sends max_ticks under the contract name", async () => {
    const { client, calls } = mockClient(200, { events: [], final: "success", ticks_used: 1 });
    await client.run("s", 7);
    expect(calls[0].body).toEqual({ max_ticks: 7 });
  });
});

describe("error mapping", () => {
  it("non-2xx responses raise ServiceError with code and message", async () => {
    const { client } = mockClient(409, { code: "TerminalState", message: "finished" });
    await expect(client.step("s")).rejects.toMatchObject({
      status: 409,
      code: "TerminalState",
      message: "finished",
    });
  });

  it("bodyless failures fall back to a generic code", async () => {
    const client = new ApiClient("http://svc", async () =>
      new Response("", { status: 500 }),
    );
    try {
      await client.step("s");
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ServiceError);
      expect((err as ServiceError).code).toBe("UnknownError");
    }
  });

  it("contract lists every error code the console special-cases", () => {
    const commandErrors = contract.endpoints.find(
      (e: any) => e.path === "/sessions/{session_id}/command",
    ).errors;
    expect(commandErrors["502"]).toContain("BackendUnavailable");
    const stepErrors = contract.endpoints.find(
      (e: any) => e.path === "/sessions/{session_id}/step",
    ).errors;
    expect(stepErrors["409"]).toContain("TerminalState");
  });
});
