import { defineConfig } from "vitest/config";

export default defineConfig({
    build: {
        outDir: "dist",
        emptyOutDir: true,
    },
    server: {
        proxy: {
            // during development the planning service runs separately
            "/api": "http://127.0.0.1:8000",
        },
    },
    test: {
        environment: "node",
        include: ["tests/**/*.test.ts"],
        testTimeout: 120_000,
        hookTimeout: 120_000,
    },
});
