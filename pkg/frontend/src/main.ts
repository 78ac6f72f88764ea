import { ControlSession } from "./session.js";
import { buildPanel, renderConnection } from "./ui.js";

const root = document.getElementById("panel");
if (root === null) throw new Error("missing #panel mount point");

const session = new ControlSession({ url: `ws://${location.host}/ws` });
const panel = buildPanel(root, session);
renderConnection(panel, session.connection);
session.connect();
