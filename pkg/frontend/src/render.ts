/** Tiny DOM helpers; no framework, no virtual anything. */

export function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") el.className = value;
    else el.setAttribute(key, value);
  }
  for (const child of children) {
    el.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return el;
}

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

export function option(value: string, label?: string): HTMLOptionElement {
  return h("option", { value }, [label ?? value]);
}

/** Replace a <select>'s options, keeping the selection when still valid. */
export function setOptions(select: HTMLSelectElement, values: string[], placeholder: string): void {
  const previous = select.value;
  clear(select);
  select.append(h("option", { value: "" }, [placeholder]));
  for (const value of values) select.append(option(value));
  if (values.includes(previous)) select.value = previous;
}

export function fieldError(form: HTMLElement, field: string, message: string | null): void {
  for (const el of form.querySelectorAll(".field-error")) el.remove();
  if (message === null) return;
  const target = form.querySelector(`[data-field="${field}"]`);
  if (target) {
    target.insertAdjacentElement("afterend", h("div", { class: "field-error" }, [message]));
  } else {
    form.append(h("div", { class: "field-error" }, [message]));
  }
}
