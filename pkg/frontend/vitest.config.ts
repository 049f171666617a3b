import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    globalSetup: "./tests/live-backend.ts",
    testTimeout: 30000,
  },
});
