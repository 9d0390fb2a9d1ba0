/**
 * Reconstructs the "stats-avg-median" demo fragment from a blank canvas
 * using only public editor operations, the way a teacher would: add nodes,
 * drag connections (defaulting to "pass"), then adjust conditions and
 * kind-specific fields in the properties panel.
 */

import { DEFAULT_BRANCH_KEYWORDS } from "../src/document.js";
import { EditorModel } from "../src/editor.js";
import { decimal } from "../src/jsontext.js";

export function buildFixtureEditor(): EditorModel {
  const ed = new EditorModel("stats-avg-median", "Average and median: learn, check, recover, code");
  ed.provides = ["average", "median", "difference"];
  ed.requires = [];

  // -- drawing area: drop the nodes --------------------------------------
  ed.addNode("L1", "lesson", { x: 40, y: 40 }, "What the average is");
  ed.addNode("Q1", "close_ended", { x: 200, y: 40 }, "Compute an average");
  ed.addNode("R1", "lesson", { x: 200, y: 180 }, "Averages, step by step");
  ed.addNode("Z1", "quiz", { x: 360, y: 180 }, "Average check");
  ed.addNode("L2", "lesson", { x: 360, y: 40 }, "What the median is");
  ed.addNode("Q2", "close_ended", { x: 520, y: 40 }, "Compute a median");
  ed.addNode("RD", "lesson", { x: 520, y: 180 }, "Average vs median");
  ed.addNode("R2", "lesson", { x: 680, y: 180 }, "Medians, step by step");
  ed.addNode("Z2", "quiz", { x: 840, y: 180 }, "Median check");
  ed.addNode("M", "lesson", { x: 680, y: 40 }, "Putting both together");
  ed.addNode("C1", "coding", { x: 840, y: 40 }, "Implement average");
  ed.addNode("C2", "coding", { x: 1000, y: 40 }, "Implement median");
  ed.setEntry("L1");

  // -- properties panel: content ------------------------------------------
  ed.setRepresentation("L1", "text", "The average of a list is the sum divided by the count.");
  ed.setRepresentation("L1", "audio", "uri:audio/average-intro");

  ed.setRepresentation("Q1", "text", "What is the average of 1, 2, 3, 4, 5?");
  ed.setKindData("Q1", {
    prompt: "What is the average of 1, 2, 3, 4, 5?",
    expected: { value: decimal(3), tolerance: decimal(1e-9) },
    distractors: {},
  });

  ed.setRepresentation("R1", "text", "Review: add the values, then divide by how many there are.");

  ed.setRepresentation("Z1", "text", "Two quick questions about averages.");
  ed.setKindData("Z1", {
    items: [
      { stem: "Average of 2 and 4?", choices: ["2", "3", "4"], correct: 1 },
      { stem: "Average of 10, 20, 30?", choices: ["15", "20", "25"], correct: 1 },
    ],
    pass_threshold: decimal(0.6),
  });

  ed.setRepresentation("L2", "text", "The median is the middle value of the sorted list.");
  ed.setRepresentation("L2", "audio", "uri:audio/median-intro");

  ed.setRepresentation("Q2", "text", "What is the median of 1, 2, 3, 4, 10?");
  ed.setKindData("Q2", {
    prompt: "What is the median of 1, 2, 3, 4, 10?",
    expected: { value: decimal(3), tolerance: decimal(1e-9) },
    distractors: { "4": "average_value" },
  });

  ed.setRepresentation(
    "RD",
    "text",
    "You computed the average. The median ignores magnitudes and takes the middle of the " +
      "sorted values; outliers move the average but not the median.",
  );

  ed.setRepresentation("R2", "text", "Review: sort the values and take the middle one.");

  ed.setRepresentation("Z2", "text", "Two quick questions about medians.");
  ed.setKindData("Z2", {
    items: [
      { stem: "Median of 1, 9, 5?", choices: ["1", "5", "9"], correct: 1 },
      { stem: "Median of 7, 7, 7?", choices: ["0", "7", "21"], correct: 1 },
    ],
    pass_threshold: decimal(0.6),
  });

  ed.setRepresentation(
    "M",
    "text",
    "You now know the average, the median, and how they differ. Next: implement both.",
  );

  ed.setRepresentation(
    "C1",
    "code",
    "Write a function average(values) returning the arithmetic mean.",
  );
  ed.setKindData("C1", {
    statement: "Write a function average(values) returning the arithmetic mean.",
    grader: {
      required_tokens: ["average"],
      forbidden_tokens: [],
      complexity_max: 10,
      branch_keywords: [...DEFAULT_BRANCH_KEYWORDS],
      test_vectors: [],
    },
  });

  ed.setRepresentation(
    "C2",
    "code",
    "Write a function median(values) returning the middle of the sorted values.",
  );
  ed.setKindData("C2", {
    statement: "Write a function median(values) returning the middle of the sorted values.",
    grader: {
      required_tokens: ["median"],
      forbidden_tokens: [],
      complexity_max: 10,
      branch_keywords: [...DEFAULT_BRANCH_KEYWORDS],
      test_vectors: [],
    },
  });

  // -- drawing area: drag the connections (created as "pass") ---------------
  ed.connect("e.L1.Q1", "L1", "Q1");
  ed.connect("e.Q1.pass", "Q1", "L2");
  ed.connect("e.Q1.fail", "Q1", "R1");
  ed.connect("e.R1.Z1", "R1", "Z1");
  ed.connect("e.Z1.pass", "Z1", "L2");
  ed.connect("e.Z1.fail", "Z1", "R1");
  ed.connect("e.L2.Q2", "L2", "Q2");
  ed.connect("e.Q2.pass", "Q2", "M");
  ed.connect("e.Q2.avg", "Q2", "RD");
  ed.connect("e.Q2.fail", "Q2", "R2");
  ed.connect("e.RD.M", "RD", "M");
  ed.connect("e.R2.Z2", "R2", "Z2");
  ed.connect("e.Z2.pass", "Z2", "M");
  ed.connect("e.Z2.fail", "Z2", "R2");
  ed.connect("e.M.C1", "M", "C1");
  ed.connect("e.C1.C2", "C1", "C2");

  // -- properties panel: edge conditions and the distractor route -----------
  ed.setCondition("e.L1.Q1", { builtin: "always" });
  ed.setCondition("e.Q1.fail", { builtin: "fail" });
  ed.setCondition("e.R1.Z1", { builtin: "always" });
  ed.setCondition("e.Z1.fail", { builtin: "fail" });
  ed.setCondition("e.L2.Q2", { builtin: "always" });
  ed.setCondition("e.Q2.avg", { expr: 'label == "average_value"' });
  ed.setEdgeLabel("e.Q2.avg", "average_value");
  ed.setCondition("e.Q2.fail", { builtin: "fail" });
  ed.setCondition("e.RD.M", { builtin: "always" });
  ed.setCondition("e.R2.Z2", { builtin: "always" });
  ed.setCondition("e.Z2.fail", { builtin: "fail" });
  ed.setCondition("e.M.C1", { builtin: "always" });

  return ed;
}
