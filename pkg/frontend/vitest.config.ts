import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the end-to-end file boots the real prediction service once
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
