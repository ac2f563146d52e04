import "./style.css";
import { Workspace } from "./app";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new Workspace(root);
