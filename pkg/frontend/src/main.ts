// Page wiring: query box (debounced), budget slider, engine selector and
// the optional side-by-side vertex_lr / ilp comparison.

import { fetchEngines } from "./api.js";
import { debounce } from "./debounce.js";
import { PanelParams, SearchPanel } from "./panel.js";

const DEBOUNCE_MS = 250;
const SNIPPETS_PER_QUERY = 3;

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) {
        throw new Error(`missing #${id}`);
    }
    return node as T;
}

export function boot(): void {
    const queryInput = el<HTMLInputElement>("query");
    const budgetInput = el<HTMLInputElement>("budget");
    const budgetReadout = el<HTMLElement>("budget-readout");
    const engineSelect = el<HTMLSelectElement>("engine");
    const compareToggle = el<HTMLInputElement>("compare");
    const leftRoot = el<HTMLElement>("panel-left");
    const rightRoot = el<HTMLElement>("panel-right");

    const left = new SearchPanel(leftRoot);
    const right = new SearchPanel(rightRoot);

    fetchEngines("").then((engines) => {
        engineSelect.replaceChildren();
        for (const name of engines) {
            const option = document.createElement("option");
            option.value = name;
            option.textContent = name;
            engineSelect.appendChild(option);
        }
        if (engines.includes("vertex_lr")) {
            engineSelect.value = "vertex_lr";
        }
        refresh();
    }).catch(() => {
        // engine listing is cosmetic; the default option stays usable
    });

    function params(engine: string): PanelParams {
        return {
            query: queryInput.value,
            budget: Number(budgetInput.value),
            k: SNIPPETS_PER_QUERY,
            engine: engine,
        };
    }

    function refresh(): void {
        budgetReadout.textContent = `${budgetInput.value} chars`;
        void left.update(params(engineSelect.value));
        const comparing = compareToggle.checked;
        rightRoot.style.display = comparing ? "" : "none";
        if (comparing) {
            void right.update(params("ilp"));
        }
    }

    queryInput.addEventListener("input", debounce(refresh, DEBOUNCE_MS));
    budgetInput.addEventListener("change", refresh);
    engineSelect.addEventListener("change", refresh);
    compareToggle.addEventListener("change", refresh);
}

if (typeof document !== "undefined" && document.getElementById("query")) {
    boot();
}
