// Presentation-only query-term highlighting.  The returned element's
// textContent is exactly the server's snippet text; matched terms are
// wrapped in <b> nodes, never rewritten.

export function renderSnippetText(text: string, terms: string[]): HTMLElement {
    const wanted = new Set(terms.map((t) => t.toLowerCase()).filter((t) => t));
    const span = document.createElement("span");
    span.className = "snippet-text";
    const tokens = text.split(" ");
    tokens.forEach((token, i) => {
        if (i > 0) {
            span.appendChild(document.createTextNode(" "));
        }
        if (wanted.has(token.toLowerCase())) {
            const bold = document.createElement("b");
            bold.textContent = token;
            span.appendChild(bold);
        } else {
            span.appendChild(document.createTextNode(token));
        }
    });
    return span;
}
