import { App } from "./app.js";
import { initialState } from "./state.js";

function stored(key: string, fallback: string): string {
  try {
    return localStorage.getItem(key) ?? fallback;
  } catch {
    return fallback;
  }
}

const root = document.getElementById("app");
if (root) {
  const state = initialState(
    stored("rulebench.endpoint", ""),
    stored("rulebench.worker", "ui"),
  );
  new App(root, state).mount();
}
