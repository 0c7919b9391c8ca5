import { beforeEach, describe, expect, it, vi } from "vitest";

import { buildLayout, clampK, clampSigma, initApp, submitQuestion } from "../src/app.js";
import { renderTurn } from "../src/render.js";
import type { AskResponse, ChatTurn } from "../src/types.js";

const WITHHELD = "This generic investment advice was withheld by the gate.";

const BLOCKED_RESPONSE: AskResponse = {
    blocked: true,
    refusal_message: "This answer was withheld: it did not pass validation against the course ontology.",
    judge_score: 0.1,
    uncertainty: 0.0,
    sigma: 0.5,
    hits: [],
    strategy: "vanilla",
    config_fingerprint: "abc123",
};

const PASSING_RESPONSE: AskResponse = {
    blocked: false,
    answer_text: "Severity weighs impact, exploitability, and scope.",
    judge_score: 0.9,
    uncertainty: 0.0,
    sigma: 0.5,
    hits: [
        {
            chunk_id: "severity-guide#0",
            doc_id: "severity-guide",
            score: 0.8123,
            excerpt: "Severity weighs impact, exploitability, and scope.",
        },
    ],
    strategy: "vanilla",
    config_fingerprint: "abc123",
};

function turnWith(response: AskResponse, status = 200): ChatTurn {
    return {
        question: "test question?",
        response,
        status,
        error: null,
        timestamp: "2026-01-01T00:00:00Z",
        settings: { k: 4, sigma: 0.5, strategy: "vanilla" },
    };
}

function jsonResponse(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

beforeEach(() => {
    document.body.innerHTML = '<main id="app"></main>';
});

describe("renderTurn gate mirror", () => {
    it("renders a refusal card with scores for a blocked response", () => {
        const card = renderTurn(turnWith(BLOCKED_RESPONSE));
        document.body.appendChild(card);
        expect(card.querySelector(".refusal-card")).not.toBeNull();
        expect(card.textContent).toContain("withheld");
        expect(card.textContent).toContain("judge 0.10");
        expect(card.querySelector(".badge-blocked")).not.toBeNull();
        expect(card.querySelector(".answer-card")).toBeNull();
    });

    it("never puts blocked answer text into the DOM, even from a malformed payload", () => {
        const malformed: AskResponse = { ...BLOCKED_RESPONSE, answer_text: WITHHELD };
        document.body.appendChild(renderTurn(turnWith(malformed)));
        expect(document.body.innerHTML).not.toContain(WITHHELD);
    });

    it("renders answer text, badge, and evidence for a passing response", () => {
        const card = renderTurn(turnWith(PASSING_RESPONSE));
        document.body.appendChild(card);
        expect(card.querySelector(".answer-text")?.textContent).toContain("Severity weighs");
        expect(card.querySelector(".badge-passed")?.textContent).toContain("judge 0.90");
        expect(card.querySelectorAll(".evidence-hit")).toHaveLength(1);
        expect(card.textContent).toContain("severity-guide");
    });

    it("renders the settings snapshot with every turn", () => {
        for (const response of [BLOCKED_RESPONSE, PASSING_RESPONSE]) {
            const card = renderTurn(turnWith(response));
            const snapshot = card.querySelector(".settings-snapshot");
            expect(snapshot?.textContent).toContain("k=4");
            expect(snapshot?.textContent).toContain("σ=0.50");
            expect(snapshot?.textContent).toContain("strategy=vanilla");
        }
    });

    it("shows a validator-unavailable card on 503 without any answer", () => {
        const body: AskResponse = {
            blocked: true,
            refusal_message: "Validator unavailable; the answer was withheld (fail closed).",
            judge_score: null,
            uncertainty: null,
            hits: [],
        };
        const card = renderTurn(turnWith(body, 503));
        expect(card.textContent).toContain("Validator unavailable, answer withheld.");
        expect(card.querySelector(".answer-card")).toBeNull();
    });

    it("renders a retry affordance on network failure", () => {
        const turn: ChatTurn = {
            question: "q?",
            response: null,
            status: 0,
            error: "network",
            timestamp: "2026-01-01T00:00:00Z",
            settings: { k: 4, sigma: 0.5, strategy: "vanilla" },
        };
        const card = renderTurn(turn);
        expect(card.querySelector(".retry-button")).not.toBeNull();
        expect(card.querySelector(".answer-card")).toBeNull();
    });
});

describe("settings panel", () => {
    it("carries k/sigma/strategy into the request body", async () => {
        const root = document.getElementById("app")!;
        buildLayout(root);
        root.querySelector<HTMLInputElement>("#setting-k")!.value = "7";
        root.querySelector<HTMLInputElement>("#setting-sigma")!.value = "0.95";
        root.querySelector<HTMLSelectElement>("#setting-strategy")!.value = "self_consistency";

        const fetchMock = vi.fn(async (_url: RequestInfo | URL, init?: RequestInit) => {
            return jsonResponse(BLOCKED_RESPONSE);
        });
        await submitQuestion(root, "borderline question?", fetchMock as unknown as typeof fetch);

        const payload = JSON.parse(String(fetchMock.mock.calls[0][1]?.body));
        expect(payload).toEqual({
            question: "borderline question?",
            k: 7,
            sigma: 0.95,
            strategy: "self_consistency",
        });
    });

    it("clamps out-of-range k with a visible notice", async () => {
        const root = document.getElementById("app")!;
        buildLayout(root);
        root.querySelector<HTMLInputElement>("#setting-k")!.value = "0";
        const fetchMock = vi.fn(async () => jsonResponse(PASSING_RESPONSE));
        const turn = await submitQuestion(root, "q?", fetchMock as unknown as typeof fetch);
        expect(turn.settings.k).toBe(1);
        expect(root.querySelector("#settings-notice")?.textContent).toContain("k clamped to 1");
    });

    it("clamp helpers bound the ranges", () => {
        expect(clampK(0)).toEqual({ value: 1, clamped: true });
        expect(clampK(99)).toEqual({ value: 10, clamped: true });
        expect(clampK(4)).toEqual({ value: 4, clamped: false });
        expect(clampSigma(-0.2)).toEqual({ value: 0, clamped: true });
        expect(clampSigma(1.7)).toEqual({ value: 1, clamped: true });
    });
});

describe("app wiring", () => {
    it("appends a blocked turn and keeps the DOM free of withheld text end to end", async () => {
        const root = document.getElementById("app")!;
        const fetchMock = vi.fn(async (url: RequestInfo | URL) => {
            const path = String(url);
            if (path.endsWith("/api/health")) {
                return jsonResponse({ status: "ok", index_ready: true, clients_reachable: true });
            }
            return jsonResponse({ ...BLOCKED_RESPONSE, answer_text: WITHHELD });
        });
        initApp(root, fetchMock as unknown as typeof fetch);

        const input = root.querySelector<HTMLInputElement>("#question-input")!;
        input.value = "how to pick stocks?";
        root.querySelector<HTMLFormElement>("#ask-form")!.dispatchEvent(
            new Event("submit", { bubbles: true, cancelable: true }),
        );
        await vi.waitFor(() => {
            expect(root.querySelectorAll(".turn")).toHaveLength(1);
        });
        expect(root.querySelector(".refusal-card")).not.toBeNull();
        expect(document.body.innerHTML).not.toContain(WITHHELD);
        expect(input.disabled).toBe(false);
    });

    it("disables the input while a request is in flight", async () => {
        const root = document.getElementById("app")!;
        let release: (value: Response) => void = () => undefined;
        const gatePromise = new Promise<Response>((resolve) => {
            release = resolve;
        });
        const fetchMock = vi.fn(async (url: RequestInfo | URL) => {
            const path = String(url);
            if (path.endsWith("/api/health")) {
                return jsonResponse({ status: "ok", index_ready: true, clients_reachable: true });
            }
            return gatePromise;
        });
        initApp(root, fetchMock as unknown as typeof fetch);

        const input = root.querySelector<HTMLInputElement>("#question-input")!;
        input.value = "slow question?";
        root.querySelector<HTMLFormElement>("#ask-form")!.dispatchEvent(
            new Event("submit", { bubbles: true, cancelable: true }),
        );
        expect(input.disabled).toBe(true);
        release(jsonResponse(PASSING_RESPONSE));
        await vi.waitFor(() => expect(input.disabled).toBe(false));
    });
});
