// Browser bootstrap: session setup form + live app panel.

import { AnnotationApi } from "./api";
import { AppController } from "./app";
import { mount } from "./vdom";
import type { SessionConfig } from "./types";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function boot(): void {
  const root = el<HTMLDivElement>("app-root");
  const baseInput = el<HTMLInputElement>("base-url");
  const configInput = el<HTMLTextAreaElement>("session-config");
  const createButton = el<HTMLButtonElement>("create-session");
  const joinInput = el<HTMLInputElement>("session-id");
  const joinButton = el<HTMLButtonElement>("join-session");

  const params = new URLSearchParams(window.location.search);
  baseInput.value = params.get("api") ?? "http://127.0.0.1:8321";

  let controller = newController();

  function newController(): AppController {
    const api = new AnnotationApi(baseInput.value);
    return new AppController(api, (tree) => mount(root, tree));
  }

  createButton.addEventListener("click", () => {
    controller = newController();
    let config: SessionConfig;
    try {
      config = JSON.parse(configInput.value) as SessionConfig;
    } catch (err) {
      root.textContent = `config is not valid JSON: ${err}`;
      return;
    }
    void controller.createSession(config);
  });

  joinButton.addEventListener("click", () => {
    controller = newController();
    void controller.joinSession(joinInput.value.trim());
  });
}

boot();
