//! Builder programs as JSON lines. Each non-blank line is one directive and
//! maps onto one builder call:
//!
//! | `op`            | builder call                          |
//! |-----------------|---------------------------------------|
//! | `run_container` | `run` with a container step           |
//! | `run_script`    | `run` with a script step (`source`)   |
//! | `run_job`       | `run` with a distributed job (`replicas`) |
//! | `artifact`      | `create_named_artifact`               |
//! | `define`        | names a step for later `use`          |
//! | `concurrent`    | `concurrent`                          |
//! | `map`           | `map`; `{item}` in strings is replaced |
//! | `when`          | `when` (`source` plus `equals` or `not_equals`) |
//! | `exec_while`    | `exec_while` (`equals` or `not_equals`) |
//! | `depends`       | `set_dependencies`                    |
//! | `dag`           | `dag`; a bare string names an existing step |
//!
//! Outputs that were not declared with `artifact` are declared as parameter
//! artifacts on first use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{BuildError, Builder, ConditionExpr, Operand, Step, StepFn};
use crate::ir::{ArtifactKind, CompareKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Build { line: usize, source: BuildError },
    #[error("line {line}: {message}")]
    Semantic { line: usize, message: String },
}

impl ProgramError {
    pub fn line(&self) -> usize {
        match self {
            ProgramError::Parse { line, .. } | ProgramError::Build { line, .. } | ProgramError::Semantic { line, .. } => {
                *line
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub image: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub after: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub replicas: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StepDirective {
    RunContainer(StepFields),
    RunScript(StepFields),
    RunJob(StepFields),
    Use {
        template: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DagItem {
    Existing(String),
    Step(StepDirective),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Directive {
    RunContainer(StepFields),
    RunScript(StepFields),
    RunJob(StepFields),
    Artifact {
        id: String,
        kind: ArtifactKind,
        #[serde(default)]
        path: String,
        #[serde(default)]
        size: Option<u64>,
    },
    Define {
        template: String,
        step: StepDirective,
    },
    Concurrent {
        steps: Vec<StepDirective>,
    },
    Map {
        over: Vec<String>,
        step: StepDirective,
    },
    When {
        source: String,
        #[serde(default)]
        equals: Option<String>,
        #[serde(default)]
        not_equals: Option<String>,
        step: StepDirective,
    },
    ExecWhile {
        #[serde(default)]
        equals: Option<String>,
        #[serde(default)]
        not_equals: Option<String>,
        #[serde(default)]
        max_iterations: Option<u32>,
        step: StepDirective,
    },
    Depends {
        from: String,
        to: String,
    },
    Dag {
        paths: Vec<Vec<DagItem>>,
    },
}

impl Directive {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("directives serialize")
    }
}

/// Parse every line of `text`; blank lines and lines starting with `#` or
/// `//` are skipped. Line numbers are 1-based.
pub fn parse_program(text: &str) -> Result<Vec<(usize, Directive)>, ProgramError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
            continue;
        }
        let d = serde_json::from_str(line).map_err(|e| ProgramError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, d));
    }
    Ok(out)
}

/// Interpreter state carried across program blocks.
#[derive(Debug, Default)]
pub(crate) struct Interpreter {
    templates: BTreeMap<String, StepDirective>,
}

fn substitute(fields: &StepFields, item: &str) -> StepFields {
    let s = |v: &String| v.replace("{item}", item);
    let all = |v: &Vec<String>| v.iter().map(s).collect();
    StepFields {
        name: fields.name.as_ref().map(s),
        image: s(&fields.image),
        command: all(&fields.command),
        args: all(&fields.args),
        inputs: all(&fields.inputs),
        outputs: all(&fields.outputs),
        after: all(&fields.after),
        source: fields.source.as_ref().map(s),
        replicas: fields.replicas.clone(),
        cpu: fields.cpu,
        memory: fields.memory,
        runtime: fields.runtime,
    }
}

fn comparison(equals: &Option<String>, not_equals: &Option<String>) -> Result<(CompareKind, String), String> {
    match (equals, not_equals) {
        (Some(v), None) => Ok((CompareKind::Equal, v.clone())),
        (None, Some(v)) => Ok((CompareKind::NotEqual, v.clone())),
        (None, None) => Err("missing `equals` or `not_equals`".into()),
        (Some(_), Some(_)) => Err("give only one of `equals` and `not_equals`".into()),
    }
}

impl Interpreter {
    fn resolve(&self, step: &StepDirective, line: usize) -> Result<(StepDirective, Option<String>), ProgramError> {
        match step {
            StepDirective::Use { template, name } => {
                let t = self.templates.get(template).ok_or_else(|| ProgramError::Semantic {
                    line,
                    message: format!("unknown template `{template}`"),
                })?;
                Ok((t.clone(), name.clone()))
            }
            other => Ok((other.clone(), None)),
        }
    }

    fn step(&self, b: &mut Builder, directive: &StepDirective, item: Option<&str>, line: usize) -> Result<Step, ProgramError> {
        let (resolved, rename) = self.resolve(directive, line)?;
        let (fields, kind) = match &resolved {
            StepDirective::RunContainer(f) => (f, "container"),
            StepDirective::RunScript(f) => (f, "script"),
            StepDirective::RunJob(f) => (f, "job"),
            StepDirective::Use { .. } => {
                return Err(ProgramError::Semantic {
                    line,
                    message: "a template cannot refer to another template".into(),
                })
            }
        };
        let mut f = match item {
            Some(item) => substitute(fields, item),
            None => fields.clone(),
        };
        if let Some(n) = rename {
            f.name = Some(n);
        }
        let mut step = match kind {
            "script" => Step::script(&f.image, f.source.clone().unwrap_or_default()),
            "job" => Step::job(&f.image, f.replicas.clone()),
            _ => Step::container(&f.image),
        };
        if kind != "script" && f.source.is_some() {
            return Err(ProgramError::Semantic {
                line,
                message: "`source` is only valid for run_script".into(),
            });
        }
        if !f.command.is_empty() {
            step = step.command(f.command.clone());
        }
        step = step.args(f.args.clone());
        if let Some(n) = &f.name {
            step = step.name(n);
        }
        for id in &f.outputs {
            b.create_named_artifact(id.clone(), ArtifactKind::Parameter, format!("/tmp/artifacts/{id}"), None)
                .map_err(|source| ProgramError::Build { line, source })?;
            step = step.output_id(id);
        }
        for id in &f.inputs {
            step = step.input_id(id);
        }
        for a in &f.after {
            step = step.after_name(a);
        }
        if let Some(c) = f.cpu {
            step = step.cpu(c);
        }
        if let Some(m) = f.memory {
            step = step.memory(m);
        }
        if let Some(r) = f.runtime {
            step = step.runtime(r);
        }
        Ok(step)
    }

    pub(crate) fn execute(&mut self, b: &mut Builder, directives: &[(usize, Directive)]) -> Result<(), ProgramError> {
        for (line, d) in directives {
            self.execute_one(b, *line, d)?;
        }
        Ok(())
    }

    fn execute_one(&mut self, b: &mut Builder, line: usize, d: &Directive) -> Result<(), ProgramError> {
        let build = |source| ProgramError::Build { line, source };
        let semantic = |message: String| ProgramError::Semantic { line, message };
        match d {
            Directive::RunContainer(f) => {
                let s = self.step(b, &StepDirective::RunContainer(f.clone()), None, line)?;
                b.run(s).map_err(build)?;
            }
            Directive::RunScript(f) => {
                let s = self.step(b, &StepDirective::RunScript(f.clone()), None, line)?;
                b.run(s).map_err(build)?;
            }
            Directive::RunJob(f) => {
                let s = self.step(b, &StepDirective::RunJob(f.clone()), None, line)?;
                b.run(s).map_err(build)?;
            }
            Directive::Artifact { id, kind, path, size } => {
                b.create_named_artifact(id.clone(), *kind, path.clone(), *size).map_err(build)?;
            }
            Directive::Define { template, step } => {
                if let StepDirective::Use { .. } = step {
                    return Err(semantic("a template cannot refer to another template".into()));
                }
                self.templates.insert(template.clone(), step.clone());
            }
            Directive::Concurrent { steps } => {
                let mut built = Vec::with_capacity(steps.len());
                for s in steps {
                    built.push(self.step(b, s, None, line)?);
                }
                let bodies: Vec<StepFn<'_>> = built
                    .into_iter()
                    .map(|s| Box::new(move |b: &mut Builder| b.run(s)) as StepFn<'_>)
                    .collect();
                b.concurrent(bodies).map_err(build)?;
            }
            Directive::Map { over, step } => {
                let mut built = Vec::with_capacity(over.len());
                for item in over {
                    built.push(self.step(b, step, Some(item), line)?);
                }
                b.map(built, |b, s| b.run(s)).map_err(build)?;
            }
            Directive::When {
                source,
                equals,
                not_equals,
                step,
            } => {
                let (kind, value) = comparison(equals, not_equals).map_err(semantic)?;
                let s = self.step(b, step, None, line)?;
                let cond = ConditionExpr {
                    kind,
                    left: Operand::Step(source.clone()),
                    right: Operand::Literal(value),
                };
                b.when(cond, |b| b.run(s)).map_err(build)?;
            }
            Directive::ExecWhile {
                equals,
                not_equals,
                max_iterations,
                step,
            } => {
                let (kind, value) = comparison(equals, not_equals).map_err(|_| build(BuildError::MissingCondition))?;
                let s = self.step(b, step, None, line)?;
                b.exec_while(ConditionExpr::output(kind, value), *max_iterations, |b| b.run(s))
                    .map_err(build)?;
            }
            Directive::Depends { from, to } => {
                b.set_dependencies_by_name(from, to).map_err(build)?;
            }
            Directive::Dag { paths } => {
                let mut built = Vec::with_capacity(paths.len());
                let mut named: Vec<String> = Vec::new();
                for path in paths {
                    let mut steps = Vec::with_capacity(path.len());
                    for item in path {
                        match item {
                            DagItem::Existing(name) => {
                                if !b.graph().contains_job(name) && !named.contains(name) {
                                    return Err(build(BuildError::UnknownStep(name.clone())));
                                }
                                steps.push(Step::container("").name(name));
                            }
                            DagItem::Step(s) => {
                                let step = self.step(b, s, None, line)?;
                                named.extend(step.step_name().map(str::to_string));
                                steps.push(step);
                            }
                        }
                    }
                    built.push(steps);
                }
                b.dag(built).map_err(build)?;
            }
        }
        Ok(())
    }
}

/// Parse and run a whole program into `builder`.
pub fn execute_program(builder: &mut Builder, text: &str) -> Result<(), ProgramError> {
    let directives = parse_program(text)?;
    Interpreter::default().execute(builder, &directives)
}
