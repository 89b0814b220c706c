// One results panel: issues requests, drops stale responses, renders
// snippets with latency readouts.  Network errors show a banner and keep
// the previous results on screen.

import { fetchSnippets, SearchResponse } from "./api.js";
import { renderSnippetText } from "./highlight.js";

export interface PanelParams {
    query: string;
    budget: number;
    k: number;
    engine: string;
}

export type PanelOutcome = "idle" | "rendered" | "empty" | "stale" | "error";

export class SearchPanel {
    private seq = 0;

    constructor(private root: HTMLElement, private base = "") {
        this.root.classList.add("panel");
    }

    /** Issue a search for the params; resolves with what happened. */
    async update(params: PanelParams): Promise<PanelOutcome> {
        const query = params.query.trim();
        if (!query) {
            this.seq += 1; // cancels anything in flight
            this.clearBanner();
            this.resultsNode().replaceChildren();
            this.statusNode().textContent = "";
            return "idle";
        }
        const ticket = ++this.seq;
        let response: SearchResponse;
        try {
            response = await fetchSnippets(this.base, query, params.budget,
                params.k, params.engine);
        } catch (err) {
            if (ticket !== this.seq) {
                return "stale";
            }
            this.showBanner(err instanceof Error ? err.message : String(err));
            return "error";
        }
        if (ticket !== this.seq) {
            return "stale";
        }
        this.clearBanner();
        this.render(response, query.split(/\s+/));
        return response.snippets.length ? "rendered" : "empty";
    }

    private render(response: SearchResponse, terms: string[]): void {
        const results = this.resultsNode();
        results.replaceChildren();
        if (!response.snippets.length) {
            this.statusNode().textContent = "no results";
            return;
        }
        this.statusNode().textContent =
            `${response.engine}: ${response.snippets.length} snippets in ` +
            `${response.total_ms.toFixed(1)} ms`;
        for (const snippet of response.snippets) {
            const item = document.createElement("div");
            item.className = "snippet";
            item.appendChild(renderSnippetText(snippet.text, terms));
            const meta = document.createElement("div");
            meta.className = "meta";
            meta.textContent =
                `${snippet.char_len} chars · ${snippet.latency_ms.toFixed(2)} ms · ` +
                snippet.sentence_id;
            item.appendChild(meta);
            results.appendChild(item);
        }
    }

    private node(cls: string): HTMLElement {
        let el = this.root.querySelector<HTMLElement>(`.${cls}`);
        if (!el) {
            el = document.createElement("div");
            el.className = cls;
            this.root.appendChild(el);
        }
        return el;
    }

    private resultsNode(): HTMLElement {
        return this.node("results");
    }

    private statusNode(): HTMLElement {
        return this.node("status");
    }

    private showBanner(message: string): void {
        const banner = this.node("banner");
        banner.classList.add("error");
        banner.textContent = `request failed: ${message}`;
    }

    private clearBanner(): void {
        const banner = this.root.querySelector<HTMLElement>(".banner");
        if (banner) {
            banner.remove();
        }
    }
}
