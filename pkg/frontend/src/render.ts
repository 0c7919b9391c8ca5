import type { AskResponse, ChatTurn, Settings } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function formatScore(value: number | null | undefined): string {
    return value === null || value === undefined ? "n/a" : value.toFixed(2);
}

export function renderSettingsSnapshot(settings: Settings): HTMLElement {
    return el(
        "div",
        "settings-snapshot",
        `k=${settings.k} σ=${settings.sigma.toFixed(2)} strategy=${settings.strategy}`,
    );
}

function renderBadge(response: AskResponse): HTMLElement {
    const badge = el(
        "span",
        response.blocked ? "badge badge-blocked" : "badge badge-passed",
        `judge ${formatScore(response.judge_score)} · uncertainty ${formatScore(
            response.uncertainty,
        )}`,
    );
    return badge;
}

function renderEvidence(response: AskResponse): HTMLElement {
    const panel = el("div", "evidence-panel");
    panel.appendChild(el("h4", undefined, "Retrieved evidence"));
    const list = el("ol", "evidence-list");
    for (const hit of response.hits ?? []) {
        const item = el("li", "evidence-hit");
        item.appendChild(el("span", "evidence-doc", `${hit.doc_id}`));
        item.appendChild(el("span", "evidence-score", ` score ${hit.score.toFixed(4)} `));
        item.appendChild(el("blockquote", "evidence-excerpt", hit.excerpt));
        list.appendChild(item);
    }
    panel.appendChild(list);
    return panel;
}

// The gate mirror: blocked responses render a refusal card; answer text is
// read only on the accepted branch, so a malformed blocked payload that
// still carries answer_text can never reach the DOM.
export function renderTurn(turn: ChatTurn): HTMLElement {
    const card = el("article", "turn");
    card.appendChild(el("div", "turn-question", `Q: ${turn.question}`));

    if (turn.error === "network") {
        const retry = el("div", "retry-card");
        retry.appendChild(el("p", undefined, "Network failure; the service could not be reached."));
        const button = el("button", "retry-button", "Retry");
        button.dataset.question = turn.question;
        retry.appendChild(button);
        card.appendChild(retry);
        card.appendChild(renderSettingsSnapshot(turn.settings));
        return card;
    }

    const response = turn.response;
    if (!response) {
        card.appendChild(el("div", "retry-card", "No response recorded."));
        card.appendChild(renderSettingsSnapshot(turn.settings));
        return card;
    }

    if (response.blocked) {
        const refusal = el("div", "refusal-card");
        const message =
            turn.status === 503
                ? "Validator unavailable, answer withheld."
                : response.refusal_message ?? "Answer withheld.";
        refusal.appendChild(el("p", "refusal-message", message));
        refusal.appendChild(
            el(
                "p",
                "refusal-scores",
                `judge ${formatScore(response.judge_score)} < σ ${formatScore(
                    response.sigma ?? turn.settings.sigma,
                )}`,
            ),
        );
        refusal.appendChild(renderBadge(response));
        card.appendChild(refusal);
    } else {
        const answer = el("div", "answer-card");
        answer.appendChild(el("p", "answer-text", response.answer_text ?? ""));
        answer.appendChild(renderBadge(response));
        answer.appendChild(renderEvidence(response));
        card.appendChild(answer);
    }

    card.appendChild(renderSettingsSnapshot(turn.settings));
    return card;
}

export function renderNotice(text: string): HTMLElement {
    return el("div", "notice", text);
}
