import { beforeEach, describe, expect, it, vi } from "vitest";

import { loadOntologyView, renderOntologyView } from "../src/ontology.js";
import type { OntologyResponse } from "../src/types.js";
import fixture from "./fixtures/ontology.json";

// Captured from the running service's GET /api/ontology (scripts/dump_ontology_fixture.py).
const ONTOLOGY = fixture as unknown as OntologyResponse;

beforeEach(() => {
    document.body.innerHTML = '<section id="view"></section>';
});

describe("ontology view", () => {
    it("renders all 68 edge rows from the live contract", () => {
        const root = document.getElementById("view")!;
        renderOntologyView(root, ONTOLOGY);
        expect(root.querySelectorAll("tr.edge-row")).toHaveLength(68);
        expect(root.textContent).toContain("3 categories");
        expect(root.textContent).toContain("12 entity types");
        expect(root.textContent).toContain("68 edges");
    });

    it("filters edges by entity type (subject or object)", () => {
        const root = document.getElementById("view")!;
        renderOntologyView(root, ONTOLOGY);
        const filter = root.querySelector<HTMLSelectElement>("select.entity-filter")!;
        filter.value = "attacker";
        filter.dispatchEvent(new Event("change"));

        const rows = [...root.querySelectorAll("tr.edge-row")];
        const expected = ONTOLOGY.edges_detail.filter(
            (e) => e.subject === "attacker" || e.object === "attacker",
        );
        expect(rows).toHaveLength(expected.length);
        expect(rows.length).toBeGreaterThan(0);
        expect(rows.length).toBeLessThan(68);
        for (const row of rows) {
            const cells = [...row.querySelectorAll("td")].map((c) => c.textContent);
            expect(cells[0] === "attacker" || cells[2] === "attacker").toBe(true);
        }

        filter.value = "";
        filter.dispatchEvent(new Event("change"));
        expect(root.querySelectorAll("tr.edge-row")).toHaveLength(68);
    });

    it("lists entity types grouped under their categories", () => {
        const root = document.getElementById("view")!;
        renderOntologyView(root, ONTOLOGY);
        const lines = [...root.querySelectorAll("p.ontology-category")].map(
            (p) => p.textContent ?? "",
        );
        expect(lines).toHaveLength(3);
        expect(lines.find((l) => l.startsWith("roles:"))).toContain("attacker");
    });

    it("shows an empty state when the service is unreachable", async () => {
        const root = document.getElementById("view")!;
        const failingFetch = vi.fn(async () => {
            throw new TypeError("network down");
        });
        await loadOntologyView(root, failingFetch as unknown as typeof fetch);
        expect(root.querySelector(".ontology-empty")).not.toBeNull();
        expect(root.querySelectorAll("tr.edge-row")).toHaveLength(0);
    });

    it("loads the view through the fetch path", async () => {
        const root = document.getElementById("view")!;
        const okFetch = vi.fn(async () =>
            new Response(JSON.stringify(ONTOLOGY), {
                status: 200,
                headers: { "Content-Type": "application/json" },
            }),
        );
        await loadOntologyView(root, okFetch as unknown as typeof fetch);
        expect(root.querySelectorAll("tr.edge-row")).toHaveLength(68);
        expect(okFetch).toHaveBeenCalledWith("/api/ontology");
    });
});
