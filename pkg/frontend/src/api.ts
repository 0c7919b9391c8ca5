import type { AskResponse, HealthResponse, OntologyResponse, Settings } from "./types.js";

export interface AskResult {
    status: number;
    body: AskResponse;
}

// Throws on transport failure; HTTP errors come back as {status, body}.
export async function askQuestion(
    question: string,
    settings: Settings,
    fetchImpl: typeof fetch = fetch,
): Promise<AskResult> {
    const response = await fetchImpl("/api/ask", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
            question,
            k: settings.k,
            sigma: settings.sigma,
            strategy: settings.strategy,
        }),
    });
    const body = (await response.json()) as AskResponse;
    return { status: response.status, body };
}

export async function fetchOntology(
    fetchImpl: typeof fetch = fetch,
): Promise<OntologyResponse> {
    const response = await fetchImpl("/api/ontology");
    if (!response.ok) {
        throw new Error(`ontology endpoint returned ${response.status}`);
    }
    return (await response.json()) as OntologyResponse;
}

export async function fetchHealth(fetchImpl: typeof fetch = fetch): Promise<HealthResponse> {
    const response = await fetchImpl("/api/health");
    if (!response.ok) {
        throw new Error(`health endpoint returned ${response.status}`);
    }
    return (await response.json()) as HealthResponse;
}
