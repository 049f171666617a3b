import { defineConfig } from "vite";

// The UI talks only to the stockflow HTTP API; during development requests
// are proxied to a locally running `stockflow serve`.
export default defineConfig({
  server: {
    proxy: {
      "/api": {
        target: process.env.STOCKFLOW_API ?? "http://127.0.0.1:8080",
        changeOrigin: true,
      },
    },
  },
  build: {
    outDir: "dist",
  },
});
