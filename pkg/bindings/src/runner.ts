import { spawnSync } from "node:child_process";

/** Error surfaced by the core library, carrying its exception type. */
export class SurveyError extends Error {
  readonly kind: string;

  constructor(kind: string, message: string) {
    super(message);
    this.name = "SurveyError";
    this.kind = kind;
  }
}

export interface ApiRequest {
  op: string;
  [key: string]: unknown;
}

function command(): { cmd: string; args: string[] } {
  const bin = process.env.SURVEYML_BIN;
  if (bin) {
    return { cmd: bin, args: ["api"] };
  }
  const python = process.env.SURVEYML_PYTHON ?? "python3";
  return { cmd: python, args: ["-m", "surveyml.cli", "api"] };
}

/**
 * Run one request through the core's stdin/stdout JSON endpoint.
 *
 * Floats survive the boundary exactly: the core serializes with
 * shortest-round-trip formatting and JSON numbers parse back to the
 * identical IEEE double.
 */
export function callApi(request: ApiRequest): Record<string, unknown> {
  const { cmd, args } = command();
  const proc = spawnSync(cmd, args, {
    input: JSON.stringify(request),
    encoding: "utf-8",
    maxBuffer: 1 << 26,
  });
  if (proc.error) {
    throw new SurveyError("spawn-failure", `cannot run ${cmd}: ${proc.error.message}`);
  }
  const line = (proc.stdout ?? "").trim().split("\n").pop() ?? "";
  let payload: Record<string, unknown>;
  try {
    payload = JSON.parse(line);
  } catch {
    throw new SurveyError(
      "protocol-failure",
      `unparseable response (exit ${proc.status}): ${line || proc.stderr}`,
    );
  }
  if (!payload.ok) {
    const err = payload.error as { type?: string; message?: string } | undefined;
    throw new SurveyError(err?.type ?? "unknown", err?.message ?? "unknown failure");
  }
  delete payload.ok;
  return payload;
}
