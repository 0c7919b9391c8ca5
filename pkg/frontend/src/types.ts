// Mirrors of the service's JSON contracts (/api/ask, /api/ontology, /api/health).

export interface HitView {
    chunk_id: string;
    doc_id: string;
    score: number;
    excerpt: string;
}

export interface AskResponse {
    blocked: boolean;
    answer_text?: string;
    refusal_message?: string;
    block_reason?: string;
    judge_score: number | null;
    uncertainty: number | null;
    sigma?: number;
    hits?: HitView[];
    strategy?: string;
    model_ids?: { answer: string; validator: string };
    latency?: Record<string, number>;
    config_fingerprint?: string;
}

export interface OntologyEdge {
    subject: string;
    relation: string;
    object: string;
}

export interface OntologyResponse {
    categories: string[];
    entity_types: string[];
    relations: string[];
    hierarchy: [string, string][];
    edges: [string, string, string][];
    edges_detail: OntologyEdge[];
    counts: {
        categories: number;
        entity_types: number;
        relations: number;
        edges: number;
    };
    rendered: string;
}

export interface HealthResponse {
    status: string;
    index_ready: boolean;
    clients_reachable: boolean;
}

export interface Settings {
    k: number;
    sigma: number;
    strategy: string;
}

export type TurnError = "network" | null;

export interface ChatTurn {
    question: string;
    response: AskResponse | null;
    status: number;
    error: TurnError;
    timestamp: string;
    settings: Settings;
}

export const STRATEGIES = [
    "vanilla",
    "in_context_1",
    "in_context_3",
    "chain_of_thought",
    "tree_of_thought",
    "self_consistency",
] as const;
