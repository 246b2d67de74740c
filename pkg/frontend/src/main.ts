import { ServiceClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}
void new App(document, new ServiceClient(""), localStorage).start(root);
