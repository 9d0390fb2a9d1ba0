export * from "./jsontext.js";
export * from "./document.js";
export * from "./editor.js";
export * from "./client.js";
export * from "./runner.js";
export * from "./render.js";
