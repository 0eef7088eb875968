import { PracticeApp } from "./app.js";

// The service base URL is the page's one knob: ?service=http://host:port
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root) {
  void new PracticeApp(root, { baseUrl }).init();
}
