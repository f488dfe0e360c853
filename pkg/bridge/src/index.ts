import { loadConfig } from "./config.js";
import { createApp } from "./server.js";

const config = loadConfig();
const app = createApp(config);
app.listen(config.port, () => {
  console.log(`bridge listening on :${config.port} (mode=${config.mode})`);
});
