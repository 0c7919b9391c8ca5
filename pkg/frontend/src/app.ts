import { askQuestion, fetchHealth } from "./api.js";
import { loadOntologyView } from "./ontology.js";
import { renderNotice, renderTurn } from "./render.js";
import { STRATEGIES, type ChatTurn, type Settings } from "./types.js";

export function clampK(raw: number): { value: number; clamped: boolean } {
    if (Number.isNaN(raw)) return { value: 1, clamped: true };
    const value = Math.min(10, Math.max(1, Math.round(raw)));
    return { value, clamped: value !== raw };
}

export function clampSigma(raw: number): { value: number; clamped: boolean } {
    if (Number.isNaN(raw)) return { value: 0.5, clamped: true };
    const value = Math.min(1, Math.max(0, raw));
    return { value, clamped: value !== raw };
}

export function buildLayout(root: HTMLElement): void {
    root.innerHTML = `
      <header class="top-bar">
        <h1>Course QA</h1>
        <span id="health-chip" class="health-chip">checking…</span>
        <button id="ontology-toggle" type="button">Ontology</button>
      </header>
      <section id="ontology-view" class="ontology-view" hidden></section>
      <section id="settings" class="settings-panel">
        <label>k <input id="setting-k" type="number" min="1" max="10" value="4"></label>
        <label>σ <input id="setting-sigma" type="range" min="0" max="1" step="0.05" value="0.5">
          <span id="sigma-value">0.50</span></label>
        <label>strategy <select id="setting-strategy"></select></label>
        <span id="settings-notice" class="notice-slot"></span>
      </section>
      <section id="turns" class="turns"></section>
      <form id="ask-form" class="ask-form">
        <input id="question-input" type="text" placeholder="Ask a course question" autocomplete="off">
        <button id="ask-button" type="submit">Ask</button>
      </form>
    `;
    const strategySelect = root.querySelector<HTMLSelectElement>("#setting-strategy")!;
    for (const kind of STRATEGIES) {
        const option = document.createElement("option");
        option.value = kind;
        option.textContent = kind;
        strategySelect.appendChild(option);
    }
}

export function readSettings(root: HTMLElement): Settings {
    const kInput = root.querySelector<HTMLInputElement>("#setting-k")!;
    const sigmaInput = root.querySelector<HTMLInputElement>("#setting-sigma")!;
    const strategySelect = root.querySelector<HTMLSelectElement>("#setting-strategy")!;
    const notice = root.querySelector<HTMLElement>("#settings-notice")!;

    const k = clampK(Number(kInput.value));
    const sigma = clampSigma(Number(sigmaInput.value));
    notice.textContent = "";
    if (k.clamped) {
        kInput.value = String(k.value);
        notice.appendChild(renderNotice(`k clamped to ${k.value}`));
    }
    if (sigma.clamped) {
        sigmaInput.value = String(sigma.value);
        notice.appendChild(renderNotice(`σ clamped to ${sigma.value.toFixed(2)}`));
    }
    return { k: k.value, sigma: sigma.value, strategy: strategySelect.value };
}

export async function submitQuestion(
    root: HTMLElement,
    question: string,
    fetchImpl: typeof fetch = fetch,
): Promise<ChatTurn> {
    const settings = readSettings(root);
    const turn: ChatTurn = {
        question,
        response: null,
        status: 0,
        error: null,
        timestamp: new Date().toISOString(),
        settings,
    };
    try {
        const result = await askQuestion(question, settings, fetchImpl);
        turn.status = result.status;
        turn.response = result.body;
    } catch {
        turn.error = "network";
    }
    root.querySelector<HTMLElement>("#turns")!.appendChild(renderTurn(turn));
    return turn;
}

export function initApp(root: HTMLElement, fetchImpl: typeof fetch = fetch): void {
    buildLayout(root);

    const form = root.querySelector<HTMLFormElement>("#ask-form")!;
    const input = root.querySelector<HTMLInputElement>("#question-input")!;
    const button = root.querySelector<HTMLButtonElement>("#ask-button")!;
    const sigmaInput = root.querySelector<HTMLInputElement>("#setting-sigma")!;
    const sigmaValue = root.querySelector<HTMLElement>("#sigma-value")!;
    const ontologyToggle = root.querySelector<HTMLButtonElement>("#ontology-toggle")!;
    const ontologyView = root.querySelector<HTMLElement>("#ontology-view")!;
    const healthChip = root.querySelector<HTMLElement>("#health-chip")!;

    sigmaInput.addEventListener("input", () => {
        sigmaValue.textContent = Number(sigmaInput.value).toFixed(2);
    });

    ontologyToggle.addEventListener("click", () => {
        ontologyView.hidden = !ontologyView.hidden;
        if (!ontologyView.hidden && !ontologyView.hasChildNodes()) {
            void loadOntologyView(ontologyView, fetchImpl);
        }
    });

    // one in-flight ask per session: the input is disabled while pending
    form.addEventListener("submit", (event) => {
        event.preventDefault();
        const question = input.value.trim();
        if (!question || input.disabled) return;
        input.disabled = true;
        button.disabled = true;
        void submitQuestion(root, question, fetchImpl).finally(() => {
            input.disabled = false;
            button.disabled = false;
            input.value = "";
            input.focus();
        });
    });

    // retry affordance re-submits the failed question
    root.querySelector<HTMLElement>("#turns")!.addEventListener("click", (event) => {
        const target = event.target as HTMLElement;
        if (target.classList.contains("retry-button") && target.dataset.question) {
            void submitQuestion(root, target.dataset.question, fetchImpl);
        }
    });

    void fetchHealth(fetchImpl)
        .then((health) => {
            healthChip.textContent = health.index_ready
                ? `service ${health.status}`
                : `service ${health.status} · no knowledge base`;
            healthChip.classList.add(health.status === "ok" ? "health-ok" : "health-degraded");
        })
        .catch(() => {
            healthChip.textContent = "service unreachable";
            healthChip.classList.add("health-degraded");
        });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
    initApp(document.getElementById("app")!);
}
