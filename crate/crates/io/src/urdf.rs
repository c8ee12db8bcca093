//! PartNet-Mobility style URDF ingestion and URDF export.
//!
//! Only visual geometry is read. Every link frame, joint axis and mesh
//! vertex is expressed in the object frame of the zero joint configuration,
//! which is the frame the object model stores geometry in. Extra fields the
//! object model needs and URDF lacks ride in the `urn:artikit:urdf`
//! namespace; see `docs/urdf-subset.md`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use artikit_core::geometry::{fit_obb, Aabb, MeshStore, PointCloud, TriMesh};
use artikit_core::math::{Mat3, RigidTransform, Vec3};
use artikit_core::model::{pose_object, validate_object, ArticulatedObject, JointSpec, JointType, Normalization, OrientedBox, PartNode, StateVector, DEFAULT_SCREW_PITCH};
use artikit_core::{Error, Result};
use roxmltree::{Document, Node};

use crate::fs::{read_text, write_atomic};
use crate::latent::{pca_shape_latent, PCA_LATENT_DIM};
use crate::obj::{load_obj, save_obj};

pub const VENDOR_NS: &str = "urn:artikit:urdf";

/// Name of the geometry-less link that exported roots hang from.
pub const WORLD_LINK: &str = "world";

#[derive(Debug, Clone, PartialEq)]
pub struct UrdfOptions {
    /// Fit the rest-state bounding box into the unit cube centered at the origin.
    pub normalize: bool,
    /// `0` or [`PCA_LATENT_DIM`].
    pub latent_dim: usize,
    pub latent_points: usize,
    pub seed: u64,
}

impl Default for UrdfOptions {
    fn default() -> Self {
        Self { normalize: true, latent_dim: 0, latent_points: 1024, seed: 0 }
    }
}

/// Parses the URDF in `path` (a directory or the `.urdf` file itself) with
/// default options.
pub fn parse_mobility_urdf(path: &Path) -> Result<(ArticulatedObject, MeshStore)> {
    parse_mobility_urdf_with(path, &UrdfOptions::default())
}

pub fn parse_mobility_urdf_with(path: &Path, opts: &UrdfOptions) -> Result<(ArticulatedObject, MeshStore)> {
    let file = locate_urdf(path)?;
    let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = read_text(&file)?;
    let mut ctx = Ingest { dir, mesh_cache: HashMap::new(), semantics: read_semantics(file.parent()) };
    ctx.parse(&text, opts)
}

fn locate_urdf(path: &Path) -> Result<PathBuf> {
    if !path.is_dir() {
        return Ok(path.to_path_buf());
    }
    let preferred = path.join("mobility.urdf");
    if preferred.is_file() {
        return Ok(preferred);
    }
    let mut found: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "urdf"))
        .collect();
    found.sort();
    found.into_iter().next().ok_or_else(|| {
        Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: no .urdf document", path.display())))
    })
}

/// `semantics.txt` rows are `link_name joint_kind label`.
fn read_semantics(dir: Option<&Path>) -> HashMap<String, String> {
    let Some(text) = dir.and_then(|d| std::fs::read_to_string(d.join("semantics.txt")).ok()) else {
        return HashMap::new();
    };
    text.lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f.len() >= 3).then(|| (f[0].to_string(), f[f.len() - 1].to_string()))
        })
        .collect()
}

enum Geometry {
    Mesh { file: String, scale: Vec3 },
    Box { size: Vec3 },
}

struct Visual {
    origin: RigidTransform<f64>,
    geometry: Geometry,
}

#[derive(Default)]
struct VendorPart {
    id: Option<usize>,
    label: Option<String>,
    state: Option<f64>,
    obb: Option<OrientedBox>,
    latent: Option<Vec<f64>>,
}

struct Link<'a> {
    name: &'a str,
    visuals: Vec<Visual>,
    vendor: VendorPart,
}

impl Link<'_> {
    fn has_geometry(&self) -> bool {
        !self.visuals.is_empty() || self.vendor.obb.is_some()
    }
}

struct Joint<'a> {
    name: &'a str,
    line: u32,
    kind: JointType,
    parent: &'a str,
    child: &'a str,
    origin: RigidTransform<f64>,
    axis: Vec3,
    range: (f64, f64),
    pitch: f64,
}

struct Ingest {
    dir: PathBuf,
    mesh_cache: HashMap<PathBuf, TriMesh>,
    semantics: HashMap<String, String>,
}

fn at(node: Node, msg: impl std::fmt::Display) -> Error {
    let pos = node.document().text_pos_at(node.range().start);
    Error::Parse { message: format!("urdf line {}: {msg}", pos.row), offset: Some(node.range().start), payload: None }
}

fn numbers(node: Node, attr: &str, raw: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = raw.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| at(node, format!("bad {attr} `{raw}`")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(at(node, format!("{attr} needs {n} finite numbers, got `{raw}`")));
    }
    Ok(v)
}

fn vec3_attr(node: Node, attr: &str, default: Vec3) -> Result<Vec3> {
    match node.attribute(attr) {
        Some(raw) => Ok(Vec3::from_slice(&numbers(node, attr, raw, 3)?)),
        None => Ok(default),
    }
}

fn vendor_attr<'a>(node: Node<'a, 'a>, attr: &str) -> Option<&'a str> {
    node.attribute((VENDOR_NS, attr))
}

fn vendor_vec3(node: Node, attr: &str) -> Result<Vec3> {
    let raw = vendor_attr(node, attr).ok_or_else(|| at(node, format!("missing artikit:{attr}")))?;
    Ok(Vec3::from_slice(&numbers(node, attr, raw, 3)?))
}

fn vendor_f64(node: Node, attr: &str) -> Result<Option<f64>> {
    vendor_attr(node, attr).map(|raw| Ok(numbers(node, attr, raw, 1)?[0])).transpose()
}

fn element<'a>(node: Node<'a, 'a>, name: &str) -> Option<Node<'a, 'a>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name && c.tag_name().namespace().is_none())
}

fn vendor_element<'a>(node: Node<'a, 'a>, name: &str) -> Option<Node<'a, 'a>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name && c.tag_name().namespace() == Some(VENDOR_NS))
}

fn origin_of(node: Node) -> Result<RigidTransform<f64>> {
    let Some(o) = element(node, "origin") else {
        return Ok(RigidTransform::identity());
    };
    let xyz = vec3_attr(o, "xyz", Vec3::zeros())?;
    let rpy = vec3_attr(o, "rpy", Vec3::zeros())?;
    Ok(RigidTransform::new(Mat3::from_rpy(rpy[0], rpy[1], rpy[2]), xyz))
}

fn required<'a>(node: Node<'a, 'a>, attr: &str) -> Result<&'a str> {
    node.attribute(attr).ok_or_else(|| at(node, format!("<{}> without `{attr}`", node.tag_name().name())))
}

fn parse_link<'a>(node: Node<'a, 'a>) -> Result<Link<'a>> {
    let name = required(node, "name")?;
    let mut visuals = Vec::new();
    for v in node.children().filter(|c| c.is_element() && c.tag_name().name() == "visual" && c.tag_name().namespace().is_none()) {
        let origin = origin_of(v)?;
        let g = element(v, "geometry").ok_or_else(|| at(v, format!("link `{name}`: visual without <geometry>")))?;
        let shape = g.children().find(|c| c.is_element()).ok_or_else(|| at(g, "empty <geometry>"))?;
        let geometry = match shape.tag_name().name() {
            "mesh" => Geometry::Mesh { file: required(shape, "filename")?.to_string(), scale: vec3_attr(shape, "scale", Vec3::new(1.0, 1.0, 1.0))? },
            "box" => Geometry::Box { size: vec3_attr(shape, "size", Vec3::zeros())? },
            other => {
                log::warn!("link `{name}`: skipping unsupported visual geometry <{other}>");
                continue;
            }
        };
        visuals.push(Visual { origin, geometry });
    }
    let mut vendor = VendorPart::default();
    if let Some(p) = vendor_element(node, "part") {
        vendor.id = vendor_f64(p, "id")?.map(|v| v as usize);
        vendor.label = vendor_attr(p, "label").map(str::to_string);
        vendor.state = vendor_f64(p, "state")?;
    }
    if let Some(b) = vendor_element(node, "obb") {
        let obb = OrientedBox::new(vendor_vec3(b, "center")?, vendor_vec3(b, "half_extents")?, vendor_vec3(b, "rotation")?);
        vendor.obb = Some(obb);
    }
    if let Some(l) = vendor_element(node, "latent") {
        let raw = vendor_attr(l, "values").unwrap_or("");
        let n = raw.split_whitespace().count();
        vendor.latent = Some(numbers(l, "values", raw, n)?);
    }
    Ok(Link { name, visuals, vendor })
}

fn parse_joint<'a>(node: Node<'a, 'a>) -> Result<Joint<'a>> {
    let name = required(node, "name")?;
    let kind_str = required(node, "type")?;
    let mut kind = match kind_str {
        "fixed" => JointType::Fixed,
        "revolute" => JointType::Revolute,
        "continuous" => JointType::Continuous,
        "prismatic" => JointType::Prismatic,
        other => return Err(at(node, format!("joint `{name}`: unsupported joint type `{other}`"))),
    };
    match vendor_attr(node, "type") {
        Some("screw") if kind == JointType::Prismatic => kind = JointType::Screw,
        Some(v) => return Err(at(node, format!("joint `{name}`: unsupported artikit:type `{v}` on a {kind_str} joint"))),
        None => {}
    }
    let link_of = |tag: &str| -> Result<&'a str> {
        let e = element(node, tag).ok_or_else(|| at(node, format!("joint `{name}` without <{tag}>")))?;
        required(e, "link")
    };
    let limit = element(node, "limit");
    let bound = |l: Node, attr: &str| -> Result<f64> { Ok(l.attribute(attr).map(|raw| numbers(l, attr, raw, 1)).transpose()?.map_or(0.0, |v| v[0])) };
    let range = match (kind, limit) {
        (JointType::Fixed, _) => (0.0, 0.0),
        (JointType::Continuous, Some(l)) if l.has_attribute("lower") && l.has_attribute("upper") => (bound(l, "lower")?, bound(l, "upper")?),
        (JointType::Continuous, _) => (-PI, PI),
        (_, Some(l)) => (bound(l, "lower")?, bound(l, "upper")?),
        (_, None) => return Err(at(node, format!("joint `{name}`: {kind_str} joint without <limit>"))),
    };
    if range.0 > range.1 {
        return Err(at(node, format!("joint `{name}`: limit lower {} above upper {}", range.0, range.1)));
    }
    let pitch = match (kind, vendor_f64(node, "pitch")?) {
        (_, Some(p)) => p,
        (JointType::Screw, None) => return Err(at(node, format!("joint `{name}`: screw without artikit:pitch"))),
        (_, None) => DEFAULT_SCREW_PITCH,
    };
    let axis = match element(node, "axis") {
        Some(a) => vec3_attr(a, "xyz", Vec3::unit_x())?,
        None => Vec3::unit_x(),
    };
    Ok(Joint {
        name,
        line: node.document().text_pos_at(node.range().start).row,
        kind,
        parent: link_of("parent")?,
        child: link_of("child")?,
        origin: origin_of(node)?,
        axis,
        range,
        pitch,
    })
}

/// First directed cycle in the parent→child link graph, as link names.
fn find_link_cycle(n: usize, names: &[&str], children: &[Vec<usize>]) -> Option<Vec<String>> {
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(v: usize, children: &[Vec<usize>], state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        state[v] = 1;
        stack.push(v);
        for &c in &children[v] {
            if state[c] == 1 {
                let start = stack.iter().position(|&s| s == c).expect("on stack");
                let mut cyc = stack[start..].to_vec();
                cyc.push(c);
                return Some(cyc);
            }
            if state[c] == 0 {
                if let Some(cyc) = dfs(c, children, state, stack) {
                    return Some(cyc);
                }
            }
        }
        stack.pop();
        state[v] = 2;
        None
    }
    (0..n).find_map(|v| if state[v] == 0 { dfs(v, children, &mut state, &mut stack) } else { None })
        .map(|c| c.into_iter().map(|i| names[i].to_string()).collect())
}

impl Ingest {
    fn parse(&mut self, text: &str, opts: &UrdfOptions) -> Result<(ArticulatedObject, MeshStore)> {
        if opts.latent_dim != 0 && opts.latent_dim != PCA_LATENT_DIM {
            return Err(Error::Parameter(format!("latent_dim must be 0 or {PCA_LATENT_DIM}, got {}", opts.latent_dim)));
        }
        let doc = Document::parse(text).map_err(|e| Error::parse(format!("urdf: {e}")))?;
        let robot = doc.root_element();
        if robot.tag_name().name() != "robot" {
            return Err(at(robot, format!("root element is <{}>, expected <robot>", robot.tag_name().name())));
        }
        let canonical = vendor_attr(robot, "canonical") == Some("1");
        let mut links = Vec::new();
        let mut joints = Vec::new();
        for c in robot.children().filter(|c| c.is_element() && c.tag_name().namespace().is_none()) {
            match c.tag_name().name() {
                "link" => links.push(parse_link(c)?),
                "joint" => joints.push(parse_joint(c)?),
                _ => {}
            }
        }
        let mut index = HashMap::new();
        for (i, l) in links.iter().enumerate() {
            if index.insert(l.name, i).is_some() {
                return Err(Error::parse(format!("urdf: duplicate link `{}`", l.name)));
            }
        }
        if links.is_empty() {
            return Err(Error::parse("urdf: no links"));
        }
        let n = links.len();
        let mut parent_joint: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, j) in joints.iter().enumerate() {
            let find = |name: &str| {
                index.get(name).copied().ok_or_else(|| Error::parse(format!("urdf line {}: joint `{}` references unknown link `{name}`", j.line, j.name)))
            };
            let (p, c) = (find(j.parent)?, find(j.child)?);
            parent_joint[c].push(k);
            children[p].push(c);
        }
        let names: Vec<&str> = links.iter().map(|l| l.name).collect();
        if let Some(cycle) = find_link_cycle(n, &names, &children) {
            return Err(Error::Structure(format!("kinematic loop through links {}", cycle.join(" -> "))));
        }
        if let Some(c) = parent_joint.iter().position(|p| p.len() > 1) {
            let parents: Vec<&str> = parent_joint[c].iter().map(|&k| joints[k].parent).collect();
            return Err(Error::Structure(format!("kinematic loop: link `{}` is attached to {}", names[c], parents.join(" and "))));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent_joint[i].is_empty()).collect();
        if roots.len() != 1 {
            let r: Vec<&str> = roots.iter().map(|&i| names[i]).collect();
            return Err(Error::Structure(format!("expected one root link, found {r:?}")));
        }
        let root = roots[0];

        // object-frame pose of every link at the zero configuration
        let mut frame = vec![RigidTransform::identity(); n];
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let p = order[head];
            head += 1;
            for (k, j) in joints.iter().enumerate() {
                if j.parent == names[p] {
                    let c = index[j.child];
                    frame[c] = frame[p].compose(&j.origin);
                    debug_assert_eq!(parent_joint[c], vec![k]);
                    order.push(c);
                }
            }
        }

        // a geometry-less root is the world; its first fixed child becomes the root part
        let mut part_root = root;
        let mut root_joint: Option<usize> = None;
        if !links[root].has_geometry() {
            let k = joints
                .iter()
                .position(|j| j.parent == names[root] && j.kind == JointType::Fixed)
                .ok_or_else(|| Error::Structure(format!("root link `{}` has no geometry and no fixed child", names[root])))?;
            part_root = index[joints[k].child];
            root_joint = Some(k);
        }
        let part_links: Vec<usize> = (0..n).filter(|&i| !(i == root && part_root != root)).collect();
        if let Some(&bad) = part_links.iter().find(|&&i| !links[i].has_geometry()) {
            return Err(Error::parse(format!("urdf: link `{}` has no visual geometry", names[bad])));
        }
        let use_vendor_ids = part_links.iter().all(|&i| links[i].vendor.id.is_some());
        let id_of: HashMap<usize, usize> =
            part_links.iter().enumerate().map(|(pos, &i)| (i, if use_vendor_ids { links[i].vendor.id.expect("checked") } else { pos })).collect();

        let mut store = MeshStore::new();
        let mut parts = Vec::with_capacity(part_links.len());
        for &i in &part_links {
            let link = &links[i];
            let mesh = self.link_mesh(link, &frame[i])?;
            let obb = match (&link.vendor.obb, &mesh) {
                (Some(b), _) => b.clone(),
                (None, Some(m)) => fit_obb(&PointCloud::new(m.vertices.clone()))?,
                (None, None) => unreachable!("geometry checked above"),
            };
            let joint_index = if i == part_root { root_joint } else { parent_joint[i].first().copied() };
            let joint = match joint_index {
                Some(k) => object_joint(&joints[k], &frame[index[joints[k].parent]])?,
                None => JointSpec::fixed(),
            };
            let parent_id = match parent_joint[i].first() {
                _ if i == part_root => None,
                Some(&k) => {
                    let p = index[joints[k].parent];
                    Some(id_of.get(&p).copied().unwrap_or(id_of[&part_root]))
                }
                None => None,
            };
            let mesh_ref = mesh.map(|m| {
                store.insert(link.name.to_string(), m);
                link.name.to_string()
            });
            parts.push(PartNode {
                part_id: id_of[&i],
                semantic_label: link
                    .vendor
                    .label
                    .clone()
                    .or_else(|| self.semantics.get(link.name).cloned())
                    .unwrap_or_else(|| link.name.to_string()),
                obb,
                shape_latent: link.vendor.latent.clone(),
                joint,
                state: link.vendor.state.unwrap_or(0.0),
                parent_id,
                mesh_ref,
            });
        }
        let name = robot.attribute("name").map(str::to_string);
        let category = if canonical { name } else { self.meta_category().or(name) }.unwrap_or_else(|| "object".into());
        let mut object = ArticulatedObject::new(category, id_of[&part_root], parts);
        if canonical {
            if let Some(nz) = vendor_element(robot, "normalization") {
                let scale = vendor_f64(nz, "scale")?.ok_or_else(|| at(nz, "missing artikit:scale"))?;
                object.normalization = Some(Normalization { center: vendor_vec3(nz, "center")?, scale });
            }
        } else if opts.normalize {
            normalize(&mut object, &mut store)?;
        }
        if opts.latent_dim == PCA_LATENT_DIM {
            for (k, p) in object.parts.iter_mut().enumerate() {
                if p.shape_latent.is_none() {
                    let surface = p.mesh_ref.as_ref().map_or_else(|| p.obb.to_mesh(), |r| store[r].clone());
                    p.shape_latent = Some(pca_shape_latent(&surface, &p.obb, opts.latent_points, opts.seed ^ k as u64)?);
                }
            }
        }
        let report = validate_object(&object);
        if !report.is_valid() {
            return Err(Error::Structure(report.to_string().trim_end().replace('\n', "; ")));
        }
        Ok((object, store))
    }

    fn meta_category(&self) -> Option<String> {
        let text = std::fs::read_to_string(self.dir.join("meta.json")).ok()?;
        let v: serde_json::Value = serde_json::from_str(&text).ok()?;
        v.get("model_cat")?.as_str().map(str::to_string)
    }

    /// All visuals of `link` merged into one object-frame mesh.
    fn link_mesh(&mut self, link: &Link, frame: &RigidTransform<f64>) -> Result<Option<TriMesh>> {
        let mut pieces = Vec::new();
        for v in &link.visuals {
            let place = frame.compose(&v.origin);
            let local = match &v.geometry {
                Geometry::Box { size } => TriMesh::cuboid(size.scale(-0.5), size.scale(0.5)),
                Geometry::Mesh { file, scale } => {
                    let mut m = self.load_mesh(file)?;
                    for p in &mut m.vertices {
                        *p = Vec3::new(p[0] * scale[0], p[1] * scale[1], p[2] * scale[2]);
                    }
                    m
                }
            };
            pieces.push(local.transformed(&place));
        }
        let merged = TriMesh::merge(&pieces);
        Ok((!merged.vertices.is_empty()).then_some(merged))
    }

    fn load_mesh(&mut self, file: &str) -> Result<TriMesh> {
        let rel = file.strip_prefix("package://").unwrap_or(file);
        let path = self.dir.join(rel);
        if !rel.to_ascii_lowercase().ends_with(".obj") {
            return Err(Error::parse(format!("urdf: mesh `{file}` is not an OBJ file")));
        }
        if let Some(m) = self.mesh_cache.get(&path) {
            return Ok(m.clone());
        }
        let m: TriMesh = load_obj(&path)?;
        self.mesh_cache.insert(path, m.clone());
        Ok(m)
    }
}

/// Axis line and range of `j` in the object frame.
fn object_joint(j: &Joint, parent_frame: &RigidTransform<f64>) -> Result<JointSpec> {
    let f = parent_frame.compose(&j.origin);
    let direction = f.rotation.mul_vec(&j.axis);
    let z = 0.0;
    let range = match j.kind {
        JointType::Fixed => [z; 4],
        JointType::Revolute | JointType::Continuous => [j.range.0, j.range.1, z, z],
        JointType::Prismatic | JointType::Screw => [z, z, j.range.0, j.range.1],
    };
    JointSpec::new(j.kind, f.translation, direction, range, j.pitch)
        .map_err(|e| Error::parse(format!("urdf line {}: joint `{}`: {e}", j.line, j.name)))
}

/// Translates and scales `object` so its rest-state box is centered at the
/// origin with longest side 1.
pub fn normalize(object: &mut ArticulatedObject, store: &mut MeshStore) -> Result<Normalization> {
    let bounds = rest_bounds(object, store)?;
    let ext = bounds.extent();
    let longest = ext[0].max(ext[1]).max(ext[2]);
    if !(longest > 0.0) {
        return Err(Error::Geometry("object has zero extent".into()));
    }
    let n = Normalization { center: bounds.center(), scale: 1.0 / longest };
    apply_normalization(object, store, &n);
    object.normalization = Some(n.clone());
    Ok(n)
}

fn apply_normalization(object: &mut ArticulatedObject, store: &mut MeshStore, n: &Normalization) {
    for m in store.values_mut() {
        for v in &mut m.vertices {
            *v = n.apply(v);
        }
    }
    for p in &mut object.parts {
        p.obb.center = n.apply(&p.obb.center);
        p.obb.half_extents = p.obb.half_extents.scale(n.scale);
        let j = &mut p.joint;
        j.axis_origin = n.apply(&j.axis_origin);
        if j.joint_type.is_translational() {
            j.range[2] *= n.scale;
            j.range[3] *= n.scale;
            // meters per radian
            j.screw_pitch *= n.scale;
        }
    }
}

/// Inverse of [`Mat3::from_rpy`].
pub fn to_rpy(r: &Mat3) -> Vec3 {
    let m = &r.0;
    let pitch = (-m[2][0]).clamp(-1.0, 1.0).asin();
    if m[2][0].abs() < 1.0 - 1e-12 {
        Vec3::new(m[2][1].atan2(m[2][2]), pitch, m[1][0].atan2(m[0][0]))
    } else {
        Vec3::new(0.0, pitch, (-m[0][1]).atan2(m[1][1]))
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn v3(v: &Vec3) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn link_name(id: usize) -> String {
    format!("part_{id}")
}

/// URDF text for `object`, with each part's mesh at `meshes/part_<id>.obj`
/// relative to the document. Parts without a mesh get a box visual.
pub fn urdf_string(object: &ArticulatedObject, meshes: &MeshStore) -> Result<(String, BTreeMap<String, TriMesh>)> {
    let report = validate_object(object);
    if !report.is_valid() {
        return Err(Error::Structure(report.to_string().trim_end().replace('\n', "; ")));
    }
    let index = object.index_of_ids()?;
    let origin_of = |id: usize| object.parts[index[&id]].joint.axis_origin;
    let mut files = BTreeMap::new();
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\"?>");
    let _ = writeln!(s, "<robot name=\"{}\" xmlns:artikit=\"{VENDOR_NS}\" artikit:canonical=\"1\">", xml_escape(&object.category));
    if let Some(n) = &object.normalization {
        let _ = writeln!(s, "  <artikit:normalization artikit:center=\"{}\" artikit:scale=\"{}\"/>", v3(&n.center), n.scale);
    }
    let _ = writeln!(s, "  <link name=\"{WORLD_LINK}\"/>");
    for p in &object.parts {
        let frame = p.joint.axis_origin;
        let _ = writeln!(s, "  <link name=\"{}\">", link_name(p.part_id));
        let _ = writeln!(
            s,
            "    <artikit:part artikit:id=\"{}\" artikit:label=\"{}\" artikit:state=\"{}\"/>",
            p.part_id,
            xml_escape(&p.semantic_label),
            p.state
        );
        let _ = writeln!(
            s,
            "    <artikit:obb artikit:center=\"{}\" artikit:half_extents=\"{}\" artikit:rotation=\"{}\"/>",
            v3(&p.obb.center),
            v3(&p.obb.half_extents),
            v3(&p.obb.rotation)
        );
        if let Some(l) = &p.shape_latent {
            let vals: Vec<String> = l.iter().map(f64::to_string).collect();
            let _ = writeln!(s, "    <artikit:latent artikit:values=\"{}\"/>", vals.join(" "));
        }
        let _ = writeln!(s, "    <visual>");
        match &p.mesh_ref {
            Some(r) => {
                let mesh = meshes.get(r).ok_or_else(|| Error::MissingMesh(r.clone()))?;
                let file = format!("meshes/{}.obj", link_name(p.part_id));
                let local = mesh.transformed(&RigidTransform::from_translation(-frame));
                files.insert(file.clone(), local);
                let _ = writeln!(s, "      <origin xyz=\"0 0 0\" rpy=\"0 0 0\"/>");
                let _ = writeln!(s, "      <geometry><mesh filename=\"{file}\"/></geometry>");
            }
            None => {
                let _ = writeln!(s, "      <origin xyz=\"{}\" rpy=\"{}\"/>", v3(&(p.obb.center - frame)), v3(&to_rpy(&p.obb.rotation_matrix())));
                let _ = writeln!(s, "      <geometry><box size=\"{}\"/></geometry>", v3(&p.obb.half_extents.scale(2.0)));
            }
        }
        let _ = writeln!(s, "    </visual>");
        let _ = writeln!(s, "  </link>");
    }
    for p in &object.parts {
        let j = &p.joint;
        let (parent, parent_origin) = match p.parent_id {
            Some(pid) => (link_name(pid), origin_of(pid)),
            None => (WORLD_LINK.to_string(), Vec3::zeros()),
        };
        let (kind, vendor) = match j.joint_type {
            JointType::Screw => ("prismatic", " artikit:type=\"screw\""),
            t => (t.as_str(), ""),
        };
        let name = if p.parent_id.is_some() { format!("joint_{}", p.part_id) } else { format!("{WORLD_LINK}_joint") };
        let _ = writeln!(s, "  <joint name=\"{name}\" type=\"{kind}\"{vendor} artikit:pitch=\"{}\">", j.screw_pitch);
        let _ = writeln!(s, "    <origin xyz=\"{}\" rpy=\"0 0 0\"/>", v3(&(j.axis_origin - parent_origin)));
        let _ = writeln!(s, "    <parent link=\"{parent}\"/>");
        let _ = writeln!(s, "    <child link=\"{}\"/>", link_name(p.part_id));
        let _ = writeln!(s, "    <axis xyz=\"{}\"/>", v3(&j.axis_direction));
        if j.joint_type != JointType::Fixed {
            let (lo, hi) = j.active_range();
            let _ = writeln!(s, "    <limit lower=\"{lo}\" upper=\"{hi}\" effort=\"0\" velocity=\"0\"/>");
        }
        let _ = writeln!(s, "  </joint>");
    }
    let _ = writeln!(s, "</robot>");
    Ok((s, files))
}

/// Writes `object` as a URDF document at `path`, meshes beside it under
/// `meshes/`.
pub fn export_urdf(object: &ArticulatedObject, meshes: &MeshStore, path: &Path) -> Result<()> {
    let (text, files) = urdf_string(object, meshes)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for (rel, mesh) in &files {
        save_obj(mesh, &dir.join(rel))?;
    }
    write_atomic(path, text.as_bytes())
}

/// Rest-state union box of the object's geometry.
pub fn rest_bounds(object: &ArticulatedObject, store: &MeshStore) -> Result<Aabb> {
    let rest = pose_object(object, &StateVector::zeros(object.len()), Some(store))?;
    rest.parts
        .iter()
        .filter_map(|p| p.surface().aabb())
        .reduce(|a, b| a.union(&b))
        .ok_or_else(|| Error::Geometry("object has no geometry".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rpy_inverts() {
        for rpy in [Vec3::new(0.3, -0.4, 2.0), Vec3::new(-2.5, 1.2, -0.1), Vec3::new(0.0, 0.0, 0.0)] {
            let r = Mat3::from_rpy(rpy[0], rpy[1], rpy[2]);
            let back = to_rpy(&r);
            assert!(Mat3::from_rpy(back[0], back[1], back[2]).max_abs_diff(&r) < 1e-12);
        }
    }
}
