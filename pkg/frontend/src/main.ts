import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.querySelector<HTMLDivElement>("#app");
if (!root) {
  throw new Error("dashboard container #app missing from index.html");
}

// Same-origin by default; ?api=http://host:port points at a remote server.
const override = new URLSearchParams(window.location.search).get("api");
const app = new App(root, new ApiClient(override ?? ""));
app.start();
