import { fetchOntology } from "./api.js";
import type { OntologyEdge, OntologyResponse } from "./types.js";

function matchesFilter(edge: OntologyEdge, entityType: string): boolean {
    return entityType === "" || edge.subject === entityType || edge.object === entityType;
}

export function renderEdgeRows(tbody: HTMLElement, edges: OntologyEdge[], filter: string): void {
    tbody.textContent = "";
    for (const edge of edges) {
        if (!matchesFilter(edge, filter)) continue;
        const row = document.createElement("tr");
        row.className = "edge-row";
        for (const value of [edge.subject, edge.relation, edge.object]) {
            const cell = document.createElement("td");
            cell.textContent = value;
            row.appendChild(cell);
        }
        tbody.appendChild(row);
    }
}

export function renderOntologyView(root: HTMLElement, data: OntologyResponse): void {
    root.textContent = "";
    const counts = data.counts;
    const summary = document.createElement("p");
    summary.className = "ontology-summary";
    summary.textContent =
        `${counts.categories} categories · ${counts.entity_types} entity types · ` +
        `${counts.relations} relations · ${counts.edges} edges`;
    root.appendChild(summary);

    for (const category of data.categories) {
        const line = document.createElement("p");
        line.className = "ontology-category";
        const members = data.hierarchy
            .filter(([, cat]) => cat === category)
            .map(([etype]) => etype);
        line.textContent = `${category}: ${members.join(", ")}`;
        root.appendChild(line);
    }

    const filter = document.createElement("select");
    filter.className = "entity-filter";
    const allOption = document.createElement("option");
    allOption.value = "";
    allOption.textContent = "all entity types";
    filter.appendChild(allOption);
    for (const etype of data.entity_types) {
        const option = document.createElement("option");
        option.value = etype;
        option.textContent = etype;
        filter.appendChild(option);
    }
    root.appendChild(filter);

    const table = document.createElement("table");
    table.className = "edge-table";
    const head = document.createElement("thead");
    head.innerHTML = "<tr><th>subject</th><th>relation</th><th>object</th></tr>";
    table.appendChild(head);
    const tbody = document.createElement("tbody");
    tbody.className = "edge-body";
    table.appendChild(tbody);
    root.appendChild(table);

    renderEdgeRows(tbody, data.edges_detail, "");
    filter.addEventListener("change", () => {
        renderEdgeRows(tbody, data.edges_detail, filter.value);
    });
}

export async function loadOntologyView(
    root: HTMLElement,
    fetchImpl: typeof fetch = fetch,
): Promise<void> {
    try {
        const data = await fetchOntology(fetchImpl);
        renderOntologyView(root, data);
    } catch {
        root.textContent = "";
        const empty = document.createElement("div");
        empty.className = "ontology-empty";
        empty.textContent = "Ontology unavailable; the service could not be reached.";
        root.appendChild(empty);
    }
}
