import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the live-service session boots a python process, so leave headroom
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
