import { mount } from "./app.js";

// Served from /ui by the storyspace service; the API lives at the root.
mount(document, "");
