import { App } from "./app.js";

// Where the API lives. Empty content means same-origin (reverse proxy).
const base =
  document.querySelector<HTMLMetaElement>('meta[name="api-base"]')?.content ?? "";

new App(document, base).start();
