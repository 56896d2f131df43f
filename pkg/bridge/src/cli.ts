#!/usr/bin/env node
/**
 * Bridge command line.
 *
 *   serve     speak sandwich-scorer/1 over stdio (default) or HTTP
 *   finetune  train a relevance model from generated pairs + manifest
 *
 * `serve` without --echo needs a loadable model artifact; a load failure
 * replaces the handshake with an error line and exits nonzero.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { errorLine } from "./protocol.js";
import { RelevanceModel } from "./model.js";
import { echoScorer, modelScorer, serveHttp, serveStdio } from "./serve.js";
import { finetune } from "./train.js";

const TEMPLATE_NOTE = "input=[marked-context|gloss] hashed-linear";

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .command(
      "serve",
      "serve sandwich-scorer/1",
      (cmd) =>
        cmd
          .option("echo", { type: "boolean", default: false, describe: "score 0.5 for everything" })
          .option("echo-value", { type: "number", default: 0.5 })
          .option("model", { type: "string", describe: "model artifact path (JSON)" })
          .option("mode", { choices: ["stdio", "http"] as const, default: "stdio" as const })
          .option("port", { type: "number", default: 8761 }),
      async (argv) => {
        let scorer;
        let name;
        if (argv.echo) {
          scorer = echoScorer(argv["echo-value"]);
          name = `bridge-echo ${TEMPLATE_NOTE}`;
        } else if (argv.model) {
          try {
            scorer = modelScorer(RelevanceModel.load(argv.model));
          } catch (err) {
            process.stdout.write(errorLine((err as Error).message) + "\n");
            process.exit(3);
          }
          name = `bridge-linear(${argv.model}) ${TEMPLATE_NOTE}`;
        } else {
          process.stdout.write(
            errorLine("no model: pass --model ARTIFACT or --echo") + "\n",
          );
          process.exit(3);
        }
        if (argv.mode === "http") {
          const server = serveHttp(scorer, name, argv.port);
          server.on("listening", () => {
            const address = server.address();
            const port = address && typeof address === "object" ? address.port : argv.port;
            console.error(`listening on :${port} (POST /score)`);
          });
        } else {
          await serveStdio(scorer, name);
        }
      },
    )
    .command(
      "finetune <pairs> <manifest> <out>",
      "train a relevance model",
      (cmd) =>
        cmd
          .positional("pairs", { type: "string", demandOption: true })
          .positional("manifest", { type: "string", demandOption: true })
          .positional("out", { type: "string", demandOption: true }),
      async (argv) => {
        try {
          const result = await finetune(argv.pairs!, argv.manifest!, argv.out!);
          console.error(
            `trained on ${result.pairs} pairs: loss ${result.initialLoss.toFixed(6)} -> ` +
              `${result.finalLoss.toFixed(6)} in ${result.optimizerSteps} steps`,
          );
        } catch (err) {
          console.error(`finetune failed: ${(err as Error).message}`);
          process.exit(1);
        }
      },
    )
    .demandCommand(1)
    .strict()
    .help()
    .parseAsync();
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
