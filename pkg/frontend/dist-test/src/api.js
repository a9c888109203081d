/** Typed client for the local `acdl serve` JSON API. All language behavior
 * lives on the server; this file only moves JSON. */
export class ApiError extends Error {
    constructor(message, status) {
        super(message);
        this.status = status;
    }
}
export class ApiClient {
    constructor(fetcher = (input, init) => fetch(input, init), base = "") {
        this.fetcher = fetcher;
        this.base = base;
    }
    async render(body, signal) {
        return this.post("/api/render", body, signal);
    }
    async examples() {
        const resp = await this.fetcher(this.base + "/api/examples");
        if (!resp.ok) {
            throw new ApiError(`examples failed (${resp.status})`, resp.status);
        }
        return (await resp.json());
    }
    async post(path, body, signal) {
        const resp = await this.fetcher(this.base + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
            signal,
        });
        const payload = (await resp.json());
        if (!resp.ok) {
            const message = typeof payload.error === "string" ? payload.error : `HTTP ${resp.status}`;
            throw new ApiError(message, resp.status);
        }
        return payload;
    }
}
