import { App, type AppConfig } from "./app.js";

// Deployment knobs arrive as query parameters so the page itself can be
// served from any static host: ?base=http://host:port&token=...&student=...
export function parseConfig(search: string): AppConfig & { task?: string } {
  const params = new URLSearchParams(search);
  return {
    baseUrl: params.get("base") ?? "",
    token: params.get("token") ?? "",
    studentId: params.get("student") ?? "student",
    task: params.get("task") ?? undefined,
  };
}

const mount = typeof document !== "undefined" && document.getElementById("app");
if (mount) {
  const config = parseConfig(window.location.search);
  const app = new App(mount, config);
  void app.start(config.task);
}
