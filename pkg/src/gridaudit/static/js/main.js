import { initApp } from "./app.js";
document.addEventListener("DOMContentLoaded", () => {
    const root = document.getElementById("app");
    if (root instanceof HTMLElement) {
        initApp(root).catch((err) => {
            console.error("failed to initialize the audit view:", err);
        });
    }
});
