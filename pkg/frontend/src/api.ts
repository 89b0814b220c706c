// Typed client for the snippet service JSON API.

export interface Snippet {
    sentence_id: string;
    text: string;
    char_len: number;
    engine: string;
    latency_ms: number;
}

export interface SearchResponse {
    query: string;
    budget: number;
    engine: string;
    snippets: Snippet[];
    skipped: { sentence_id: string; reason: string }[];
    total_ms: number;
}

export async function fetchSnippets(
    base: string,
    query: string,
    budget: number,
    k: number,
    engine: string,
): Promise<SearchResponse> {
    const params = new URLSearchParams({
        q: query,
        b: String(budget),
        k: String(k),
        engine: engine,
    });
    const response = await fetch(`${base}/search?${params.toString()}`);
    if (!response.ok) {
        throw new Error(`search failed: HTTP ${response.status}`);
    }
    return (await response.json()) as SearchResponse;
}

export async function fetchEngines(base: string): Promise<string[]> {
    const response = await fetch(`${base}/engines`);
    if (!response.ok) {
        throw new Error(`engines failed: HTTP ${response.status}`);
    }
    const body = (await response.json()) as { engines: string[] };
    return body.engines;
}
