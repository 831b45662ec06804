import assert from "node:assert/strict";
import { test } from "node:test";

import { bucketLabel, guessReferentiality, wordCount } from "../src/buckets.js";

test("word counting splits on any whitespace run", () => {
  assert.equal(wordCount("Turn left"), 2);
  assert.equal(wordCount("  Turn   left\tnow \n"), 3);
  assert.equal(wordCount(""), 0);
  assert.equal(wordCount("   "), 0);
});

test("bucket labels match the harness boundaries", () => {
  assert.equal(bucketLabel(0), "Ultra-Short");
  assert.equal(bucketLabel(2), "Ultra-Short");
  assert.equal(bucketLabel(4), "Ultra-Short");
  assert.equal(bucketLabel(5), "Short");
  assert.equal(bucketLabel(8), "Short");
  assert.equal(bucketLabel(9), "Typical");
  assert.equal(bucketLabel(10), "Typical");
  assert.equal(bucketLabel(12), "Typical");
  assert.equal(bucketLabel(13), "Descriptive");
  assert.equal(bucketLabel(18), "Descriptive");
  assert.equal(bucketLabel(19), "Long");
  assert.equal(bucketLabel(40), "Long");
});

test("two-word versus ten-word pair gets the advertised labels", () => {
  assert.equal(bucketLabel(wordCount("Turn left")), "Ultra-Short");
  assert.equal(
    bucketLabel(wordCount("Turn left at the intersection right after the crosswalk ahead")),
    "Typical",
  );
});

test("referentiality guesses", () => {
  assert.equal(guessReferentiality("Follow the yellow car"), "Dynamic Only");
  assert.equal(guessReferentiality("Turn left at the intersection"), "Static Only");
  assert.equal(guessReferentiality("Go straight"), "None (Non-ref)");
  assert.equal(
    guessReferentiality("Stop behind the bus before the crosswalk"),
    "Static + Dynamic",
  );
  assert.equal(guessReferentiality(""), "None (Non-ref)");
});
