import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { debounce } from "../src/debounce.js";

describe("debounce", () => {
    beforeEach(() => vi.useFakeTimers());
    afterEach(() => vi.useRealTimers());

    it("fires once after the wait, with the last arguments", () => {
        const calls: string[] = [];
        const fn = debounce((s: string) => calls.push(s), 250);
        fn("p");
        fn("pa");
        fn("par");
        vi.advanceTimersByTime(249);
        expect(calls).toEqual([]);
        vi.advanceTimersByTime(1);
        expect(calls).toEqual(["par"]);
    });

    it("separate bursts fire separately", () => {
        const calls: string[] = [];
        const fn = debounce((s: string) => calls.push(s), 250);
        fn("a");
        vi.advanceTimersByTime(250);
        fn("b");
        vi.advanceTimersByTime(250);
        expect(calls).toEqual(["a", "b"]);
    });
});
